"""Word-synchronized fringe search over a decoder FST plus CTC prefix
probabilities, with interaction points, and a standard time-synchronous CTC
beam decoder as the non-interactive baseline.

The interactive search runs an outer loop over word positions.  Inside, every
non-frozen search state is advanced one CTC frame per sweep (stay child plus
one extend child per live phoneme per FST continuation); a state freezes when
its extension lands on a word-boundary FST state, i.e. when it has just
emitted its next word.  Once the whole fringe is frozen, the distinct newest
words form a ranked candidate list and a chooser callback picks one (or an
auto-accept rule fires on the score gap); states ending in other words are
discarded, survivors unfreeze, and the next position begins.

State score is -log(p_b + p_nb) + FST path weight; lower is better.  All tie
breaking uses the total order (score, prefix id, fst state, t, words), so a
decode is fully deterministic.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from typing import Callable, Optional, Sequence

from wordsync.ctc import (
    FrameProbs,
    PrefixNode,
    PrefixTable,
    advance_extend,
    advance_stay,
    init_prefix_table,
    log_add,
    prefix_prob,
)
from wordsync.fst import WeightedFst, feed_symbol

_NEG_INF = float("-inf")


class DecodeError(ValueError):
    """Invalid decode request (incompatible inventories, bad selection)."""


@dataclass
class DecodeConfig:
    """Search knobs; defaults follow the evaluation setup."""

    beam_width: int = 200
    fst_branch_cap: int = 20
    candidate_cap: int = 100
    phoneme_floor: float = math.log(1e-5)
    auto_accept_threshold: Optional[float] = None

    def to_json(self) -> str:
        d = asdict(self)
        if d["auto_accept_threshold"] is not None and math.isinf(d["auto_accept_threshold"]):
            d["auto_accept_threshold"] = "inf"
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "DecodeConfig":
        d = json.loads(text)
        if d.get("auto_accept_threshold") == "inf":
            d["auto_accept_threshold"] = math.inf
        return cls(**d)


@dataclass
class SearchState:
    prefix: PrefixNode
    t_ctc: int
    fst_state: int
    words: tuple[str, ...]
    path_weight: float
    frozen: bool = False
    sid: int = -1


@dataclass(frozen=True)
class Candidate:
    word: str
    score: float
    support: tuple[int, ...]  # sids of the fringe states ending in this word
    rank: int


@dataclass(frozen=True)
class InteractionOutcome:
    selected: Optional[str] = None
    stop: bool = False

    def __post_init__(self):
        if self.stop and self.selected is not None:
            raise DecodeError("stop outcome cannot carry a selection")


@dataclass(frozen=True)
class Selection:
    position: int
    word: str
    rank: int
    auto: bool
    gap: float  # score margin to the runner-up at this position (inf if none)


@dataclass
class DecodeResult:
    transcript: tuple[str, ...]
    candidates_per_position: list[list[Candidate]]
    selections: list[Selection]


Chooser = Callable[[list[Candidate]], InteractionOutcome]
Observer = Callable[[int, list[SearchState], list[Candidate]], None]


def score(state: SearchState, table: PrefixTable) -> float:
    """-log(p_b + p_nb) + accumulated FST path weight; lower is better."""
    return -prefix_prob(table, state.prefix, state.t_ctc) + state.path_weight


def _state_sort_key(state: SearchState, table: PrefixTable):
    return (
        score(state, table),
        state.prefix.uid,
        state.fst_state,
        state.t_ctc,
        state.words,
    )


class _SidCounter:
    __slots__ = ("next",)

    def __init__(self) -> None:
        self.next = 0

    def take(self) -> int:
        sid = self.next
        self.next += 1
        return sid


class _FeedCache:
    """Memo for feed_symbol over an immutable graph (one per decode session)."""

    __slots__ = ("fst", "cap", "_memo")

    def __init__(self, fst: WeightedFst, cap: int):
        self.fst = fst
        self.cap = cap
        self._memo: dict[tuple[int, str], list] = {}

    def get(self, state: int, symbol: str):
        key = (state, symbol)
        try:
            return self._memo[key]
        except KeyError:
            res = feed_symbol(self.fst, state, symbol, self.cap)
            self._memo[key] = res
            return res


def _merge_and_prune(
    pool: list[SearchState], table: PrefixTable, beam_width: int
) -> list[SearchState]:
    """Merge duplicate (prefix, t, fst state, words) states keeping the lower
    path weight, drop zero-probability states, and keep the beam_width best
    by the total order."""
    merged: dict[tuple[int, int, int, tuple[str, ...]], SearchState] = {}
    for s in pool:
        key = (s.prefix.uid, s.t_ctc, s.fst_state, s.words)
        kept = merged.get(key)
        if kept is None or s.path_weight < kept.path_weight:
            merged[key] = s
    ranked = []
    for s in merged.values():
        sc = score(s, table)
        if sc == math.inf:
            continue
        ranked.append(((sc, s.prefix.uid, s.fst_state, s.t_ctc, s.words), s))
    ranked.sort(key=lambda item: item[0])
    return [s for _, s in ranked[:beam_width]]


def expand_fringe(
    fringe: list[SearchState],
    table: PrefixTable,
    frames: FrameProbs,
    fst: WeightedFst,
    config: DecodeConfig,
    sids: Optional[_SidCounter] = None,
    feeds: Optional[_FeedCache] = None,
) -> list[SearchState]:
    """Advance every non-frozen state by one CTC frame.

    Each active state produces a stay child and, for every phoneme whose
    frame probability clears the floor, extend children for each FST
    continuation of that phoneme (capped at fst_branch_cap).  Children that
    land on a word-boundary state are frozen; children with no FST
    continuation are dropped.  Frozen states pass through unchanged and the
    pool is pruned uniformly by score to beam_width states.
    """
    if sids is None:
        sids = _SidCounter()
    if feeds is None:
        feeds = _FeedCache(fst, config.fst_branch_cap)
    frozen = [s for s in fringe if s.frozen]
    active = [s for s in fringe if not s.frozen]
    if not active:
        raise DecodeError("expand_fringe needs at least one non-frozen state")
    if any(s.t_ctc >= frames.num_frames for s in active):
        raise DecodeError("non-frozen state has no frames left to consume")
    # Ascending t first so table entries shared across timesteps accumulate
    # before they are consumed within this sweep.
    active.sort(key=lambda s: (s.t_ctc,) + _state_sort_key(s, table))

    boundary = fst.word_boundary
    floor = config.phoneme_floor
    children: list[SearchState] = []
    for s in active:
        advance_stay(table, s.prefix, s.t_ctc, frames)
        children.append(
            SearchState(s.prefix, s.t_ctc + 1, s.fst_state, s.words, s.path_weight, False, sids.take())
        )
        row = frames.row(s.t_ctc)
        for p in range(1, len(row)):
            if row[p] <= floor:
                continue
            continuations = feeds.get(s.fst_state, frames.phoneme_table[p])
            if not continuations:
                continue
            advance_extend(table, s.prefix, p, s.t_ctc, frames)
            table_child = table.child(s.prefix, p)
            for res in continuations:
                children.append(
                    SearchState(
                        table_child,
                        s.t_ctc + 1,
                        res.state,
                        s.words + res.words,
                        s.path_weight + res.weight,
                        res.state in boundary,
                        sids.take(),
                    )
                )
    return _merge_and_prune(frozen + children, table, config.beam_width)


def build_candidates(
    fringe: list[SearchState], table: PrefixTable, candidate_cap: int = 100
) -> list[Candidate]:
    """Group the (all frozen) fringe by newest word; best score per word wins.

    Sorted ascending by score with lexicographic word tie-break, truncated to
    candidate_cap.  An empty fringe yields an empty list (forced stop).
    """
    if any(not s.frozen for s in fringe):
        raise DecodeError("build_candidates requires a fully frozen fringe")
    groups: dict[str, list[SearchState]] = {}
    for s in fringe:
        groups.setdefault(s.words[-1], []).append(s)
    scored = []
    for word, states in groups.items():
        best = min(score(s, table) for s in states)
        support = tuple(sorted(s.sid for s in states))
        scored.append((best, word, support))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [
        Candidate(word=w, score=sc, support=sup, rank=i)
        for i, (sc, w, sup) in enumerate(scored[:candidate_cap])
    ]


def select_word(fringe: list[SearchState], word: str) -> list[SearchState]:
    """Keep exactly the states whose newest word is ``word`` and unfreeze them."""
    survivors = [s for s in fringe if s.words and s.words[-1] == word]
    if not survivors:
        raise DecodeError(f"word {word!r} is not on any fringe state")
    for s in survivors:
        s.frozen = False
    return survivors


def auto_accept_gap(candidates: Sequence[Candidate], threshold: float) -> bool:
    """True when the interaction point may be skipped in favour of rank 0.

    Fires when there is a single candidate or the score gap between the best
    and second-best reaches the threshold.
    """
    if not candidates:
        raise DecodeError("no candidates to auto-accept")
    if len(candidates) == 1:
        return True
    return (candidates[1].score - candidates[0].score) >= threshold


def _check_inventory(fst: WeightedFst, frames: FrameProbs) -> None:
    missing = fst.input_symbols() - set(frames.phonemes)
    if missing:
        raise DecodeError(
            "FST consumes phonemes absent from the frame table: " + " ".join(sorted(missing))
        )


def interactive_decode(
    fst: WeightedFst,
    frames: FrameProbs,
    chooser: Chooser,
    config: Optional[DecodeConfig] = None,
    observer: Optional[Observer] = None,
) -> DecodeResult:
    """Decode word positions one at a time, pausing at interaction points.

    Expands the fringe round-robin until every state is frozen, builds the
    candidate list, consults the auto-accept rule and otherwise the chooser,
    then filters the fringe to the chosen word.  Active states that exhaust
    the frames mid-word are dropped; decoding ends when the chooser stops,
    candidates run out, or every state is exhausted.  Returns the accepted
    transcript plus the candidate list shown at each position.
    """
    if config is None:
        config = DecodeConfig()
    _check_inventory(fst, frames)
    table = init_prefix_table()
    sids = _SidCounter()
    feeds = _FeedCache(fst, config.fst_branch_cap)
    root = SearchState(table.root, 0, fst.start, (), 0.0, False, sids.take())
    fringe = [root]
    T = frames.num_frames
    transcript: list[str] = []
    shown: list[list[Candidate]] = []
    selections: list[Selection] = []
    thr = config.auto_accept_threshold
    use_auto = thr is not None and math.isfinite(thr)

    position = 0
    while True:
        while True:
            kept = [s for s in fringe if s.frozen or s.t_ctc < T]
            fringe = kept
            if not any(not s.frozen for s in fringe):
                break
            fringe = expand_fringe(fringe, table, frames, fst, config, sids, feeds)
        if not fringe:
            break
        candidates = build_candidates(fringe, table, config.candidate_cap)
        if not candidates:
            break
        shown.append(candidates)
        if observer is not None:
            observer(position, fringe, candidates)
        if use_auto and auto_accept_gap(candidates, thr):
            word, rank, auto = candidates[0].word, 0, True
        else:
            outcome = chooser(candidates)
            if outcome.stop:
                break
            word = outcome.selected
            rank = next((c.rank for c in candidates if c.word == word), None)
            if rank is None:
                raise DecodeError(f"chooser selected {word!r}, which is not a candidate")
            auto = False
        gap = candidates[1].score - candidates[0].score if len(candidates) > 1 else math.inf
        fringe = select_word(fringe, word)
        transcript.append(word)
        selections.append(Selection(position, word, rank, auto, gap))
        table.prune_to_prefixes([s.prefix for s in fringe])
        position += 1
    return DecodeResult(tuple(transcript), shown, selections)


def standard_beam_decode(
    fst: WeightedFst,
    frames: FrameProbs,
    config: Optional[DecodeConfig] = None,
) -> tuple[str, ...]:
    """Conventional time-synchronous CTC beam search over the same graph.

    No freezing and no interaction: every state consumes all frames, and the
    best-scoring state after adding remaining final weights determines the
    transcript.
    """
    if config is None:
        config = DecodeConfig()
    _check_inventory(fst, frames)
    table = init_prefix_table()
    sids = _SidCounter()
    feeds = _FeedCache(fst, config.fst_branch_cap)
    fringe = [SearchState(table.root, 0, fst.start, (), 0.0, False, sids.take())]
    floor = config.phoneme_floor
    last_best: tuple[str, ...] = ()
    for t in range(frames.num_frames):
        fringe.sort(key=lambda s: _state_sort_key(s, table))
        if fringe:
            last_best = fringe[0].words
        children: list[SearchState] = []
        row = frames.row(t)
        for s in fringe:
            advance_stay(table, s.prefix, t, frames)
            children.append(
                SearchState(s.prefix, t + 1, s.fst_state, s.words, s.path_weight, False, sids.take())
            )
            for p in range(1, len(row)):
                if row[p] <= floor:
                    continue
                continuations = feeds.get(s.fst_state, frames.phoneme_table[p])
                if not continuations:
                    continue
                advance_extend(table, s.prefix, p, t, frames)
                child = table.child(s.prefix, p)
                for res in continuations:
                    children.append(
                        SearchState(
                            child,
                            t + 1,
                            res.state,
                            s.words + res.words,
                            s.path_weight + res.weight,
                            False,
                            sids.take(),
                        )
                    )
        fringe = _merge_and_prune(children, table, config.beam_width)
        if not fringe:
            return last_best
    finishable = []
    for s in fringe:
        fw = fst.final_weight(s.fst_state)
        if fw is not None:
            finishable.append(((score(s, table) + fw,) + _state_sort_key(s, table)[1:], s))
    if finishable:
        finishable.sort(key=lambda item: item[0])
        return finishable[0][1].words
    fringe.sort(key=lambda s: _state_sort_key(s, table))
    return fringe[0].words
