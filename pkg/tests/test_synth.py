import math

import numpy as np
import pytest

from tests.conftest import (
    CLEAN_CORPUS,
    CLEAN_LEXICON,
    CONFUSION_CORPUS,
    CONFUSION_LEXICON,
    build_graph,
)
from wordsync.decoder import standard_beam_decode
from wordsync.fst import UnknownSymbolError
from wordsync.phonemes import ARPABET
from wordsync.synth import (
    LexiconError,
    SynthConfig,
    make_benchmark,
    parse_corpus,
    parse_lexicon,
    synthesize_frame_probs,
)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


def test_parse_single_entry():
    entries = parse_lexicon("CAT\tK AE T\n")
    assert len(entries) == 1
    assert entries[0].word == "CAT"
    assert entries[0].phonemes == ("K", "AE", "T")
    assert entries[0].weight == 0.0


def test_parse_dedup_keeps_min_weight():
    text = "CAT\tK AE T\t0.5\nCAT\tK AE T\t0.2\n"
    entries = parse_lexicon(text)
    assert len(entries) == 1
    assert entries[0].weight == 0.2


def test_parse_unknown_phoneme_names_symbol_and_line():
    with pytest.raises(UnknownSymbolError) as err:
        parse_lexicon("CAT\tK QQ T\n")
    msg = str(err.value)
    assert "QQ" in msg and "line 1" in msg and "CAT" in msg


def test_parse_malformed_line_number():
    with pytest.raises(LexiconError) as err:
        parse_lexicon("CAT\tK AE T\nJUNK-NO-TAB\n")
    assert "line 2" in str(err.value)


def test_parse_corpus_tokenizes():
    assert parse_corpus("a b  c\n\n d\n") == [["a", "b", "c"], ["d"]]


# ---------------------------------------------------------------------------
# Frame synthesis
# ---------------------------------------------------------------------------


def greedy_collapse(frames):
    out = []
    prev = -1
    for idx in frames.log_probs.argmax(axis=1):
        if idx != prev and idx != 0:
            out.append(frames.phoneme_table[idx])
        prev = idx
    return out


def test_noiseless_rows_recover_sequence():
    config = SynthConfig(seed=5)
    seq = ["K", "AE", "T", "T", "S", "S"]
    frames = synthesize_frame_probs(seq, ARPABET, config)
    assert greedy_collapse(frames) == seq
    sums = np.exp(frames.log_probs).sum(axis=1)
    assert np.all(np.abs(sums - 1.0) < 1e-9)


def test_same_seed_bit_identical():
    config = SynthConfig(seed=123, noise_temperature=0.7, confusion_mass=0.3)
    a = synthesize_frame_probs(["F", "AE", "N"], ARPABET, config)
    b = synthesize_frame_probs(["F", "AE", "N"], ARPABET, config)
    assert np.array_equal(a.log_probs, b.log_probs)


def test_confusion_mass_half_equalizes_pair():
    config = SynthConfig(seed=1, confusion_mass=0.5)
    frames = synthesize_frame_probs(["S"], ARPABET, config)
    probs = np.exp(frames.log_probs)
    s_col = frames.index_of("S")
    z_col = frames.index_of("Z")
    # interior rows place equal probability on S and Z
    for t in range(1, frames.num_frames - 1):
        assert probs[t, s_col] == pytest.approx(probs[t, z_col], abs=1e-12)
        assert probs[t, s_col] == pytest.approx((1 - config.blank_prob) / 2, abs=1e-12)


def test_empty_sequence_rejected():
    with pytest.raises(ValueError):
        synthesize_frame_probs([], ARPABET, SynthConfig())
    with pytest.raises(UnknownSymbolError):
        synthesize_frame_probs(["QQ"], ARPABET, SynthConfig())


def test_temperature_increases_row_entropy():
    def mean_entropy(tau):
        config = SynthConfig(seed=9, noise_temperature=tau)
        frames = synthesize_frame_probs(["K", "AE", "T"], ARPABET, config)
        probs = np.exp(frames.log_probs)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(probs > 0, -probs * np.log(probs), 0.0)
        return terms.sum(axis=1).mean()

    entropies = [mean_entropy(tau) for tau in (0.0, 0.5, 2.0)]
    assert entropies[0] < entropies[1] < entropies[2]


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


def test_benchmark_reproducible_and_in_vocab():
    config = SynthConfig(seed=77)
    a = make_benchmark(CLEAN_LEXICON, CLEAN_CORPUS, 10, config)
    b = make_benchmark(CLEAN_LEXICON, CLEAN_CORPUS, 10, config)
    words = {e.word for e in CLEAN_LEXICON}
    assert [i.transcript for i in a] == [i.transcript for i in b]
    for x, y in zip(a, b):
        assert np.array_equal(x.frames.log_probs, y.frames.log_probs)
        assert set(x.transcript) <= words
        assert len(x.transcript) >= 1


def test_noiseless_benchmark_standard_decode_is_exact(clean_graph):
    config = SynthConfig(seed=31, blank_prob=0.1)
    items = make_benchmark(CLEAN_LEXICON, CLEAN_CORPUS, 8, config)
    for item in items:
        assert standard_beam_decode(clean_graph, item.frames) == item.transcript


def test_candidate_entropy_rises_with_temperature(confusion_graph):
    """Average per-point candidate entropy is monotone over 3 temperatures."""
    from wordsync.decoder import InteractionOutcome, interactive_decode

    def avg_entropy(tau):
        config = SynthConfig(seed=13, noise_temperature=tau, confusion_mass=0.3, blank_prob=0.15)
        items = make_benchmark(CONFUSION_LEXICON, CONFUSION_CORPUS, 6, config)
        entropies = []
        for item in items:
            result = interactive_decode(
                confusion_graph,
                item.frames,
                lambda c: InteractionOutcome(selected=c[0].word),
            )
            for cl in result.candidates_per_position:
                weights = np.exp(-np.array([c.score for c in cl]))
                p = weights / weights.sum()
                entropies.append(float(-(p * np.log(p)).sum()))
        return float(np.mean(entropies))

    values = [avg_entropy(tau) for tau in (0.0, 0.4, 1.2)]
    assert values[0] <= values[1] <= values[2]
