"""Simulated-user oracle, word error rate, and evaluation aggregates.

At each interaction point the oracle inspects the candidate list against the
ground-truth transcript: it selects the current intended word if listed
(FOUND_CURRENT), otherwise the next intended word (FOUND_NEXT, skipping one),
otherwise the best-scoring candidate (NOT_FOUND, cursor stays put so the
intended word can still match later).  When the missing word is the last one
of the transcript the session ends (TERMINAL_NOT_FOUND); that event is
reported separately but still counts toward the interaction-point total used
for percentages.
"""

from __future__ import annotations

import enum
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from wordsync.ctc import FrameProbs
from wordsync.decoder import (
    Candidate,
    DecodeConfig,
    InteractionOutcome,
    interactive_decode,
)
from wordsync.fst import WeightedFst


class OracleAction(enum.Enum):
    FOUND_CURRENT = "found_current"
    FOUND_NEXT = "found_next"
    NOT_FOUND = "not_found"
    TERMINAL_NOT_FOUND = "terminal_not_found"


COUNTED_ACTIONS = (OracleAction.FOUND_CURRENT, OracleAction.FOUND_NEXT, OracleAction.NOT_FOUND)
_FOUND = (OracleAction.FOUND_CURRENT.value, OracleAction.FOUND_NEXT.value)


def oracle_step(
    candidates: Sequence[Candidate],
    transcript: Sequence[str],
    cursor: int,
) -> tuple[Optional[OracleAction], InteractionOutcome, int]:
    """One oracle decision; returns (action, outcome, new cursor).

    ``action`` is None when the oracle simply stops (transcript exhausted or
    nothing to choose from).
    """
    if not (0 <= cursor <= len(transcript)):
        raise ValueError(f"cursor {cursor} out of range for transcript of {len(transcript)}")
    if cursor == len(transcript):
        return None, InteractionOutcome(stop=True), cursor
    if not candidates:
        return None, InteractionOutcome(stop=True), cursor
    words = {c.word for c in candidates}
    current = transcript[cursor]
    if current in words:
        return OracleAction.FOUND_CURRENT, InteractionOutcome(selected=current), cursor + 1
    if cursor + 1 < len(transcript) and transcript[cursor + 1] in words:
        return OracleAction.FOUND_NEXT, InteractionOutcome(selected=transcript[cursor + 1]), cursor + 2
    if cursor == len(transcript) - 1:
        return OracleAction.TERMINAL_NOT_FOUND, InteractionOutcome(stop=True), cursor
    return OracleAction.NOT_FOUND, InteractionOutcome(selected=candidates[0].word), cursor


# ---------------------------------------------------------------------------
# Word error rate
# ---------------------------------------------------------------------------


def edit_distance(reference: Sequence[str], hypothesis: Sequence[str]) -> int:
    """Word-level Levenshtein distance with unit costs."""
    n, m = len(reference), len(hypothesis)
    prev = list(range(m + 1))
    for i in range(1, n + 1):
        cur = [i] + [0] * m
        ri = reference[i - 1]
        for j in range(1, m + 1):
            cur[j] = min(
                prev[j] + 1,
                cur[j - 1] + 1,
                prev[j - 1] + (ri != hypothesis[j - 1]),
            )
        prev = cur
    return prev[m]


def wer(reference: Sequence[str], hypothesis: Sequence[str]) -> float:
    """Edit distance divided by reference length; may exceed 1."""
    if not reference:
        raise ValueError("empty reference")
    return edit_distance(reference, hypothesis) / len(reference)


# ---------------------------------------------------------------------------
# Sessions and aggregates
# ---------------------------------------------------------------------------


@dataclass
class SessionStats:
    """Outcome of one oracle-driven decode.

    ``records`` pairs each oracle action with the rank it selected (None for
    the terminal miss, which selects nothing).  ``interaction_points`` counts
    the three selecting actions; the terminal miss joins the denominator of
    report percentages but never the selections.
    """

    reference: tuple[str, ...]
    hypothesis: tuple[str, ...]
    records: list[tuple[str, Optional[int]]]
    interaction_points: int
    auto_accepted: int
    wer: float
    edits: int
    ref_len: int

    @property
    def actions(self) -> dict[str, int]:
        return dict(Counter(a for a, _ in self.records))

    @property
    def ranks(self) -> list[int]:
        return [r for _, r in self.records if r is not None]

    def action_count(self, action: OracleAction) -> int:
        return sum(1 for a, _ in self.records if a == action.value)


def run_oracle_session(
    fst: WeightedFst,
    frames: FrameProbs,
    transcript: Sequence[str],
    config: Optional[DecodeConfig] = None,
    observer=None,
) -> SessionStats:
    """Drive interactive_decode with the oracle as the chooser."""
    reference = tuple(transcript)
    if not reference:
        raise ValueError("empty reference transcript")
    cursor = 0
    records: list[tuple[str, Optional[int]]] = []

    def chooser(candidates):
        nonlocal cursor
        action, outcome, cursor = oracle_step(candidates, reference, cursor)
        if action is not None:
            rank = None
            if outcome.selected is not None:
                rank = next(c.rank for c in candidates if c.word == outcome.selected)
            records.append((action.value, rank))
        return outcome

    result = interactive_decode(fst, frames, chooser, config, observer=observer)
    edits = edit_distance(reference, result.transcript)
    counted = sum(1 for a, _ in records if a != OracleAction.TERMINAL_NOT_FOUND.value)
    return SessionStats(
        reference=reference,
        hypothesis=result.transcript,
        records=records,
        interaction_points=counted,
        auto_accepted=sum(1 for s in result.selections if s.auto),
        wer=edits / len(reference),
        edits=edits,
        ref_len=len(reference),
    )


@dataclass
class AggregateStats:
    """Totals over a batch of sessions, in the layout of the action table.

    Percentages are over all interaction points including the terminal
    misses; ``success_rate`` is the share of points where the oracle found
    the current or next word, and ``success_excl_first`` restricts that to
    selections at rank >= 1.
    """

    counts: dict[str, int]
    terminal_not_found: int
    counted_points: int
    total_points: int
    percentages: dict[str, float]
    success_count: int
    success_rate: float
    success_excl_first_count: int
    success_excl_first_rate: float
    pooled_wer: float
    total_edits: int
    total_ref_len: int
    sessions: int

    def format_table(self) -> str:
        rows = [
            ("Not found", self.counts.get("not_found", 0), self.percentages.get("not_found", 0.0)),
            ("Found current", self.counts.get("found_current", 0), self.percentages.get("found_current", 0.0)),
            ("Found next", self.counts.get("found_next", 0), self.percentages.get("found_next", 0.0)),
            ("Success rate excl. first", self.success_excl_first_count, self.success_excl_first_rate),
            ("Success rate", self.success_count, self.success_rate),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{'Oracle action':<{width}}  Count  %"]
        for name, count, pct in rows:
            lines.append(f"{name:<{width}}  {count:>5}  {pct:.1f}%")
        lines.append(
            f"({self.total_points} interaction points; in {self.terminal_not_found} the last "
            "word was not found and no selection was made)"
        )
        return "\n".join(lines)


def aggregate_stats(sessions: Iterable[SessionStats]) -> AggregateStats:
    sessions = list(sessions)
    counts: Counter = Counter()
    ranked_found = 0
    total_edits = 0
    total_ref = 0
    for s in sessions:
        for action, rank in s.records:
            counts[action] += 1
            if action in _FOUND and rank is not None and rank >= 1:
                ranked_found += 1
        total_edits += s.edits
        total_ref += s.ref_len
    counted = sum(counts[a.value] for a in COUNTED_ACTIONS)
    terminal = counts[OracleAction.TERMINAL_NOT_FOUND.value]
    total = counted + terminal
    pct = {
        a.value: (100.0 * counts[a.value] / total if total else 0.0) for a in COUNTED_ACTIONS
    }
    success = counts[OracleAction.FOUND_CURRENT.value] + counts[OracleAction.FOUND_NEXT.value]
    return AggregateStats(
        counts={a.value: counts[a.value] for a in COUNTED_ACTIONS},
        terminal_not_found=terminal,
        counted_points=counted,
        total_points=total,
        percentages=pct,
        success_count=success,
        success_rate=100.0 * success / total if total else 0.0,
        success_excl_first_count=ranked_found,
        success_excl_first_rate=100.0 * ranked_found / total if total else 0.0,
        pooled_wer=total_edits / total_ref if total_ref else 0.0,
        total_edits=total_edits,
        total_ref_len=total_ref,
        sessions=len(sessions),
    )


def rank_histogram(sessions: Iterable[SessionStats]) -> dict[int, int]:
    """Counts of selected candidate indices over all selections."""
    hist: Counter = Counter()
    for s in sessions:
        hist.update(s.ranks)
    return dict(sorted(hist.items()))


def histogram_csv(hist: dict[int, int]) -> str:
    lines = ["rank,count"]
    for rank in sorted(hist):
        lines.append(f"{rank},{hist[rank]}")
    return "\n".join(lines) + "\n"
