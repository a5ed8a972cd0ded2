import random

import pytest
from hypothesis import given, settings, strategies as st

from tests.conftest import (
    CLEAN_CORPUS,
    CLEAN_LEXICON,
    one_hot_frames,
    spell_with_blanks,
)
from wordsync.decoder import Candidate, DecodeConfig
from wordsync.oracle import (
    OracleAction,
    SessionStats,
    aggregate_stats,
    edit_distance,
    histogram_csv,
    oracle_step,
    rank_histogram,
    run_oracle_session,
    wer,
)


def cands(*words):
    return [Candidate(w, float(i), (), i) for i, w in enumerate(words)]


# ---------------------------------------------------------------------------
# oracle_step
# ---------------------------------------------------------------------------


def test_found_current():
    action, outcome, cursor = oracle_step(cands("the", "a"), ["the", "cat"], 0)
    assert action is OracleAction.FOUND_CURRENT
    assert outcome.selected == "the" and not outcome.stop
    assert cursor == 1


def test_found_next_skips_one():
    action, outcome, cursor = oracle_step(cands("cat"), ["the", "cat"], 0)
    assert action is OracleAction.FOUND_NEXT
    assert outcome.selected == "cat"
    assert cursor == 2


def test_not_found_picks_best_and_stays():
    action, outcome, cursor = oracle_step(cands("dog", "cow"), ["the", "cat"], 0)
    assert action is OracleAction.NOT_FOUND
    assert outcome.selected == "dog"  # best scoring
    assert cursor == 0


def test_terminal_not_found_stops():
    action, outcome, cursor = oracle_step(cands("dog"), ["the", "cat"], 1)
    assert action is OracleAction.TERMINAL_NOT_FOUND
    assert outcome.stop and outcome.selected is None
    assert cursor == 1


def test_exhausted_transcript_stops_without_action():
    action, outcome, cursor = oracle_step(cands("dog"), ["the"], 1)
    assert action is None and outcome.stop


def test_empty_candidates_stop():
    action, outcome, cursor = oracle_step([], ["the"], 0)
    assert action is None and outcome.stop


def test_cursor_validation():
    with pytest.raises(ValueError):
        oracle_step(cands("a"), ["a"], 5)


@given(
    st.lists(st.sampled_from("abcde"), min_size=1, max_size=6),
    st.lists(st.sampled_from("abcde"), min_size=0, max_size=4, unique=True),
    st.integers(min_value=0, max_value=6),
)
@settings(max_examples=300, deadline=None)
def test_oracle_step_properties(transcript, candidate_words, cursor):
    cursor = min(cursor, len(transcript))
    candidates = cands(*candidate_words)
    action, outcome, new_cursor = oracle_step(candidates, transcript, cursor)
    if outcome.selected is not None:
        assert outcome.selected in {c.word for c in candidates}
    assert new_cursor - cursor in (0, 1, 2)
    if action is OracleAction.FOUND_CURRENT:
        assert new_cursor == cursor + 1
    elif action is OracleAction.FOUND_NEXT:
        assert new_cursor == cursor + 2
    else:
        assert new_cursor == cursor


# ---------------------------------------------------------------------------
# WER
# ---------------------------------------------------------------------------


def brute_force_distance(ref, hyp):
    """Unmemoized recursion over edit scripts; the independent check."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    return min(
        brute_force_distance(ref[1:], hyp[1:]) + (ref[0] != hyp[0]),
        brute_force_distance(ref, hyp[1:]) + 1,
        brute_force_distance(ref[1:], hyp) + 1,
    )


def test_wer_examples():
    assert wer(["a", "b", "c"], ["a", "b", "c"]) == 0.0
    assert wer(["a", "b", "c"], ["a", "x", "c"]) == pytest.approx(1 / 3)
    assert wer(["a"], ["x", "y"]) == 2.0  # one substitution plus one insertion
    with pytest.raises(ValueError):
        wer([], ["a"])


def test_wer_matches_brute_force_random_pairs():
    rng = random.Random(505)
    vocab = ["a", "b", "c", "d", "e"]
    for _ in range(100):
        ref = [rng.choice(vocab) for _ in range(rng.randint(1, 8))]
        hyp = [rng.choice(vocab) for _ in range(rng.randint(0, 8))]
        assert edit_distance(ref, hyp) == brute_force_distance(ref, hyp)


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def stats_from_records(records, ref=("a",), hyp=("a",)):
    counted = sum(1 for a, _ in records if a != "terminal_not_found")
    return SessionStats(
        reference=ref,
        hypothesis=hyp,
        records=records,
        interaction_points=counted,
        auto_accepted=0,
        wer=0.0,
        edits=0,
        ref_len=len(ref),
    )


def test_aggregate_reproduces_published_arithmetic():
    """410/2097/254 counted actions plus 96 terminal misses -> 2857 points."""
    records = []
    records += [("not_found", 0)] * 410
    records += [("found_current", 1)] * 1300 + [("found_current", 0)] * 797
    records += [("found_next", 1)] * 214 + [("found_next", 0)] * 40
    records += [("terminal_not_found", None)] * 96
    agg = aggregate_stats([stats_from_records(records)])
    assert agg.total_points == 2857
    assert agg.counted_points == 2761
    assert round(agg.percentages["not_found"], 1) == 14.4
    assert round(agg.percentages["found_current"], 1) == 73.4
    assert round(agg.percentages["found_next"], 1) == 8.9
    assert agg.success_count == 2351
    assert round(agg.success_rate, 1) == 82.3
    assert agg.success_excl_first_count == 1514
    assert round(agg.success_excl_first_rate, 1) == 53.0
    table = agg.format_table()
    assert "82.3%" in table and "14.4%" in table


def test_aggregate_zero_counts_no_division_error():
    agg = aggregate_stats([])
    assert agg.total_points == 0
    assert agg.success_rate == 0.0
    assert all(v == 0.0 for v in agg.percentages.values())


def test_success_plus_notfound_cover_counted_points():
    records = [("found_current", 0)] * 7 + [("not_found", 0)] * 3 + [("found_next", 1)] * 2
    agg = aggregate_stats([stats_from_records(records)])
    assert agg.success_count + agg.counts["not_found"] == agg.counted_points


def test_rank_histogram():
    s1 = stats_from_records([("found_current", 0), ("found_current", 0), ("found_next", 3)])
    s2 = stats_from_records([("not_found", 0)])
    hist = rank_histogram([s1, s2])
    assert hist == {0: 3, 3: 1}
    assert sum(hist.values()) == 4
    assert histogram_csv(hist) == "rank,count\n0,3\n3,1\n"


# ---------------------------------------------------------------------------
# Sessions
# ---------------------------------------------------------------------------


def test_clean_session_all_found_current(clean_graph):
    words = ("red", "cat", "top")
    frames = one_hot_frames(spell_with_blanks(CLEAN_LEXICON, words))
    stats = run_oracle_session(clean_graph, frames, words)
    assert stats.hypothesis == words
    assert stats.wer == 0.0
    assert stats.actions == {"found_current": 3}
    assert stats.interaction_points == 3
    assert stats.ranks == [0, 0, 0]


def test_session_with_out_of_candidates_word(clean_graph):
    """Frames spell a word missing from the reference: forces a non-FoundCurrent."""
    words_spoken = ["red", "cat"]
    reference = ("red", "dog")  # 'dog' never appears in the frames
    frames = one_hot_frames(spell_with_blanks(CLEAN_LEXICON, words_spoken))
    stats = run_oracle_session(clean_graph, frames, reference)
    kinds = set(stats.actions)
    assert kinds & {"not_found", "found_next", "terminal_not_found"}


def test_session_batch_aggregates(clean_graph):
    batch = [("red",), ("blue", "dog"), ("sun", "top", "red")]
    sessions = []
    for words in batch:
        frames = one_hot_frames(spell_with_blanks(CLEAN_LEXICON, words))
        sessions.append(run_oracle_session(clean_graph, frames, words))
    agg = aggregate_stats(sessions)
    assert agg.sessions == 3
    assert agg.counted_points == 6
    assert agg.pooled_wer == 0.0


def test_empty_reference_rejected(clean_graph):
    frames = one_hot_frames(spell_with_blanks(CLEAN_LEXICON, ["red"]))
    with pytest.raises(ValueError):
        run_oracle_session(clean_graph, frames, [])
