"""Weighted finite-state transducer core.

Arcs carry an input phoneme (or epsilon), an output word (or epsilon) and an
additive negative-log weight.  The module provides the graph type itself,
lexicon construction, weighted composition with epsilon handling, and
``feed_symbol`` -- the one-phoneme stepping primitive the decoder is built on.

States marked as *word boundaries* are the states reached exactly when one
complete word has just been emitted.  ``feed_symbol`` stops its epsilon
closure at word-boundary states so the caller can suspend a hypothesis there;
feeding a phoneme from a word-boundary state transparently resumes through
the epsilon arcs that were not taken (lexicon restart loop, LM backoff).
"""

from __future__ import annotations

import heapq
import math
from collections import deque
from typing import Iterable, NamedTuple, Optional, Sequence

EPSILON = "<eps>"

_NEG_INF = float("-inf")


class GraphError(Exception):
    """Structural problem in a weighted FST."""


class UnknownSymbolError(ValueError):
    """An input symbol is not part of the expected inventory."""


class Arc(NamedTuple):
    ilabel: str
    olabel: str
    weight: float
    dst: int


class FeedResult(NamedTuple):
    state: int
    words: tuple[str, ...]
    weight: float


def _check_symbol(sym: str) -> str:
    if not sym or any(c.isspace() for c in sym):
        raise GraphError(f"bad arc label {sym!r}: labels must be non-empty and contain no whitespace")
    return sym


class WeightedFst:
    """Mutable weighted transducer with contiguous integer state ids."""

    def __init__(self) -> None:
        self._arcs: list[list[Arc]] = []
        self._finals: dict[int, float] = {}
        self.word_boundary: set[int] = set()
        self.start: int = -1
        self._arc_index: Optional[list[dict[str, tuple[Arc, ...]]]] = None

    # -- construction -----------------------------------------------------

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def add_arc(self, src: int, ilabel: str, olabel: str, weight: float, dst: int) -> None:
        self._check_state(src)
        self._check_state(dst)
        _check_symbol(ilabel)
        _check_symbol(olabel)
        if not math.isfinite(weight):
            raise GraphError(f"non-finite arc weight {weight!r} on {src}->{dst}")
        self._arcs[src].append(Arc(ilabel, olabel, float(weight), dst))
        self._arc_index = None

    def set_final(self, state: int, weight: float = 0.0) -> None:
        self._check_state(state)
        if not math.isfinite(weight):
            raise GraphError(f"non-finite final weight {weight!r} on state {state}")
        self._finals[state] = float(weight)

    def mark_word_boundary(self, state: int) -> None:
        self._check_state(state)
        self.word_boundary.add(state)

    # -- queries ----------------------------------------------------------

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def has_state(self, state: int) -> bool:
        return 0 <= state < len(self._arcs)

    def arcs(self, state: int) -> list[Arc]:
        self._check_state(state)
        return self._arcs[state]

    def arcs_with_ilabel(self, state: int, ilabel: str) -> tuple[Arc, ...]:
        """Arcs from ``state`` whose input label is ``ilabel`` (lazily indexed)."""
        if self._arc_index is None:
            index: list[dict[str, tuple[Arc, ...]]] = []
            for arcs in self._arcs:
                table: dict[str, list[Arc]] = {}
                for a in arcs:
                    table.setdefault(a.ilabel, []).append(a)
                index.append({k: tuple(v) for k, v in table.items()})
            self._arc_index = index
        self._check_state(state)
        return self._arc_index[state].get(ilabel, ())

    def final_weight(self, state: int) -> Optional[float]:
        self._check_state(state)
        return self._finals.get(state)

    def final_states(self) -> dict[int, float]:
        return dict(self._finals)

    def input_symbols(self) -> set[str]:
        return {a.ilabel for arcs in self._arcs for a in arcs if a.ilabel != EPSILON}

    def output_symbols(self) -> set[str]:
        return {a.olabel for arcs in self._arcs for a in arcs if a.olabel != EPSILON}

    def _check_state(self, state: int) -> None:
        if not (0 <= state < len(self._arcs)):
            raise GraphError(f"state {state} does not exist (have {len(self._arcs)} states)")

    # -- validation -------------------------------------------------------

    def validate(self) -> None:
        """Check the structural invariants; raise GraphError on violation."""
        if self.start < 0:
            raise GraphError("no start state set")
        self._check_state(self.start)
        for s, arcs in enumerate(self._arcs):
            for a in arcs:
                if not self.has_state(a.dst):
                    raise GraphError(f"arc from {s} targets missing state {a.dst}")
                if not math.isfinite(a.weight):
                    raise GraphError(f"non-finite weight on arc {s}->{a.dst}")
        self._check_epsilon_acyclic()

    def _check_epsilon_acyclic(self) -> None:
        # A cycle of epsilon-input arcs would make closures ill-defined as
        # path enumerations, so reject any such cycle outright (stricter than
        # only rejecting zero-weight cycles).
        indeg = [0] * self.num_states
        eps_out: list[list[int]] = [[] for _ in range(self.num_states)]
        for s, arcs in enumerate(self._arcs):
            for a in arcs:
                if a.ilabel == EPSILON:
                    eps_out[s].append(a.dst)
                    indeg[a.dst] += 1
        queue = deque(s for s in range(self.num_states) if indeg[s] == 0)
        seen = 0
        while queue:
            s = queue.popleft()
            seen += 1
            for d in eps_out[s]:
                indeg[d] -= 1
                if indeg[d] == 0:
                    queue.append(d)
        if seen != self.num_states:
            raise GraphError("epsilon-input cycle detected")

    # -- serialization ----------------------------------------------------

    FORMAT_HEADER = "wordsync-fst 1"

    def to_text(self) -> str:
        """Canonical text form; round-trips bit-exactly (weights via repr)."""
        lines = [self.FORMAT_HEADER]
        lines.append(f"states {self.num_states}")
        lines.append(f"start {self.start}")
        lines.append(f"arcs {self.num_arcs}")
        for s, arcs in enumerate(self._arcs):
            for a in arcs:
                lines.append(f"{s} {a.ilabel} {a.olabel} {a.weight!r} {a.dst}")
        finals = sorted(self._finals.items())
        lines.append(f"finals {len(finals)}")
        for s, w in finals:
            lines.append(f"{s} {w!r}")
        bounds = sorted(self.word_boundary)
        lines.append(f"boundaries {len(bounds)}")
        for s in bounds:
            lines.append(str(s))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "WeightedFst":
        lines = text.splitlines()
        if not lines or lines[0].strip() != cls.FORMAT_HEADER:
            raise GraphError(f"bad FST header (expected {cls.FORMAT_HEADER!r})")
        pos = 1

        def section(name: str) -> int:
            nonlocal pos
            if pos >= len(lines):
                raise GraphError(f"truncated FST file: missing {name} section")
            parts = lines[pos].split()
            if len(parts) != 2 or parts[0] != name:
                raise GraphError(f"line {pos + 1}: expected '{name} <count>', got {lines[pos]!r}")
            pos += 1
            return int(parts[1])

        fst = cls()
        n_states = section("states")
        for _ in range(n_states):
            fst.add_state()
        start = section("start")
        fst.set_start(start)
        n_arcs = section("arcs")
        for _ in range(n_arcs):
            parts = lines[pos].split()
            if len(parts) != 5:
                raise GraphError(f"line {pos + 1}: bad arc line {lines[pos]!r}")
            src, ilabel, olabel, weight, dst = parts
            fst.add_arc(int(src), ilabel, olabel, float(weight), int(dst))
            pos += 1
        n_finals = section("finals")
        for _ in range(n_finals):
            parts = lines[pos].split()
            if len(parts) != 2:
                raise GraphError(f"line {pos + 1}: bad final line {lines[pos]!r}")
            fst.set_final(int(parts[0]), float(parts[1]))
            pos += 1
        n_bounds = section("boundaries")
        for _ in range(n_bounds):
            fst.mark_word_boundary(int(lines[pos].split()[0]))
            pos += 1
        return fst

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "WeightedFst":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


# ---------------------------------------------------------------------------
# Epsilon closure and symbol feeding
# ---------------------------------------------------------------------------


def _epsilon_closure(
    fst: WeightedFst,
    seeds: Iterable[tuple[int, tuple[str, ...], float]],
    stop_at_boundary: bool,
) -> list[tuple[int, tuple[str, ...], float]]:
    """Transitive closure over epsilon-input arcs from ``seeds``.

    Returns every (state, emitted words, weight) reachable, merged by
    (state, words) keeping the minimum weight.  When ``stop_at_boundary`` is
    set, word-boundary states are reported but their outgoing epsilon arcs
    are not followed.  Closure depth is capped at the state count; exceeding
    it indicates a malformed graph.
    """
    best: dict[tuple[int, tuple[str, ...]], float] = {}
    heap: list[tuple[float, int, tuple[str, ...], int]] = []
    for state, words, weight in seeds:
        key = (state, words)
        if weight < best.get(key, math.inf):
            best[key] = weight
            heapq.heappush(heap, (weight, state, words, 0))
    cap = fst.num_states
    while heap:
        weight, state, words, depth = heapq.heappop(heap)
        if weight > best.get((state, words), math.inf):
            continue
        if stop_at_boundary and state in fst.word_boundary:
            continue
        eps_arcs = fst.arcs_with_ilabel(state, EPSILON)
        if not eps_arcs:
            continue
        if depth >= cap:
            raise GraphError("epsilon closure exceeded the state count; graph has an epsilon cycle")
        for arc in eps_arcs:
            nwords = words + ((arc.olabel,) if arc.olabel != EPSILON else ())
            nweight = weight + arc.weight
            key = (arc.dst, nwords)
            if nweight < best.get(key, math.inf):
                best[key] = nweight
                heapq.heappush(heap, (nweight, arc.dst, nwords, depth + 1))
    return [(s, w, wt) for (s, w), wt in best.items()]


def feed_symbol(fst: WeightedFst, state: int, phoneme: str, max_states: int = 20) -> list[FeedResult]:
    """Consume one phoneme from ``state`` and follow epsilon arcs afterwards.

    The result lists the (state, emitted words, added weight) outcomes,
    merged by (state, words) with the minimum weight, ordered by weight then
    state id then words, and truncated to the ``max_states`` best.  An empty
    list means the phoneme leads nowhere from here (a dead end).

    Feeding from a word-boundary state first resumes the epsilon arcs that
    the previous feed stopped at (the closure that suspends at boundaries is
    the other half of this contract).
    """
    if phoneme == EPSILON:
        raise UnknownSymbolError("cannot feed epsilon as a phoneme")
    if state in fst.word_boundary:
        sources = _epsilon_closure(fst, [(state, (), 0.0)], stop_at_boundary=False)
        sources.sort(key=lambda item: (item[2], item[0], item[1]))
    else:
        fst._check_state(state)
        sources = [(state, (), 0.0)]
    landings: list[tuple[int, tuple[str, ...], float]] = []
    for src, src_words, src_weight in sources:
        for arc in fst.arcs_with_ilabel(src, phoneme):
            words = src_words + ((arc.olabel,) if arc.olabel != EPSILON else ())
            landings.append((arc.dst, words, src_weight + arc.weight))
    if not landings:
        return []
    results = _epsilon_closure(fst, landings, stop_at_boundary=True)
    results.sort(key=lambda item: (item[2], item[0], item[1]))
    return [FeedResult(s, w, wt) for s, w, wt in results[:max_states]]


# ---------------------------------------------------------------------------
# Lexicon construction
# ---------------------------------------------------------------------------


def build_lexicon_fst(entries, inventory: Optional[Sequence[str]] = None) -> WeightedFst:
    """Compile lexicon entries into a transducer from phoneme strings to words.

    Pronunciation prefixes are shared trie-style with silent arcs; the final
    phoneme of each (word, pronunciation) pair gets its own emitting arc into
    a single word-boundary state, which loops back to the start via epsilon
    so word sequences concatenate.  Homophones therefore keep parallel
    emitting arcs; nothing is determinized.
    """
    entries = list(entries)
    if not entries:
        raise ValueError("empty lexicon")
    allowed = set(inventory) if inventory is not None else None
    fst = WeightedFst()
    root = fst.add_state()
    boundary = fst.add_state()
    fst.set_start(root)
    fst.set_final(boundary, 0.0)
    fst.mark_word_boundary(boundary)
    fst.add_arc(boundary, EPSILON, EPSILON, 0.0, root)

    trie: dict[tuple[int, str], int] = {}
    for entry in entries:
        word = entry.word
        phonemes = tuple(entry.phonemes)
        if not phonemes:
            raise ValueError(f"empty pronunciation for word {word!r}")
        if allowed is not None:
            for p in phonemes:
                if p not in allowed:
                    raise UnknownSymbolError(f"unknown phoneme {p!r} in entry for word {word!r}")
        node = root
        for p in phonemes[:-1]:
            key = (node, p)
            nxt = trie.get(key)
            if nxt is None:
                nxt = fst.add_state()
                fst.add_arc(node, p, EPSILON, 0.0, nxt)
                trie[key] = nxt
            node = nxt
        fst.add_arc(node, phonemes[-1], word, float(entry.weight), boundary)
    return fst


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def compose_decoder(l: WeightedFst, g: WeightedFst) -> WeightedFst:
    """Weighted composition L..G with epsilon sequencing.

    Between two matched symbols, L-side epsilon-output moves are taken before
    G-side epsilon-input moves (a two-state filter); this keeps composed
    accepting paths in bijection with compatible (L path, G path) pairs, so
    weights and path counts are preserved without determinization.

    Word boundaries of the result are the filter-0 states whose L component
    is a word boundary, i.e. exactly the states entered when G has just
    consumed the emitted word.
    """
    missing = l.output_symbols() - g.input_symbols()
    if missing:
        raise GraphError(
            "alphabet mismatch: L emits symbols G does not accept: " + " ".join(sorted(missing))
        )
    if l.start < 0 or g.start < 0:
        raise GraphError("both inputs need a start state")

    g_by_label: list[dict[str, list[Arc]]] = []
    for s in range(g.num_states):
        table: dict[str, list[Arc]] = {}
        for arc in g.arcs(s):
            table.setdefault(arc.ilabel, []).append(arc)
        g_by_label.append(table)

    out = WeightedFst()
    ids: dict[tuple[int, int, int], int] = {}

    def state_id(triple: tuple[int, int, int]) -> int:
        sid = ids.get(triple)
        if sid is None:
            sid = out.add_state()
            ids[triple] = sid
            queue.append(triple)
        return sid

    queue: deque[tuple[int, int, int]] = deque()
    start = (l.start, g.start, 0)
    out.set_start(state_id(start))

    while queue:
        triple = queue.popleft()
        ls, gs, flt = triple
        src = ids[triple]
        for arc in l.arcs(ls):
            if arc.olabel == EPSILON:
                if flt == 0:
                    dst = state_id((arc.dst, gs, 0))
                    out.add_arc(src, arc.ilabel, EPSILON, arc.weight, dst)
            else:
                for garc in g_by_label[gs].get(arc.olabel, ()):
                    dst = state_id((arc.dst, garc.dst, 0))
                    out.add_arc(src, arc.ilabel, garc.olabel, arc.weight + garc.weight, dst)
        for garc in g_by_label[gs].get(EPSILON, ()):
            dst = state_id((ls, garc.dst, 1))
            out.add_arc(src, EPSILON, garc.olabel, garc.weight, dst)

    for triple, sid in ids.items():
        ls, gs, flt = triple
        lw = l.final_weight(ls)
        gw = g.final_weight(gs)
        if lw is not None and gw is not None:
            out.set_final(sid, lw + gw)
        if flt == 0 and ls in l.word_boundary:
            out.mark_word_boundary(sid)
    return out


# ---------------------------------------------------------------------------
# Path queries
# ---------------------------------------------------------------------------


def best_path_weight(fst: WeightedFst, words: Sequence[str]) -> float:
    """Minimum weight of an accepting path whose output-label string is ``words``.

    Returns inf when no such path exists.  Weight includes the final weight.
    """
    if fst.start < 0:
        raise GraphError("no start state")
    n = len(words)
    dist: list[dict[int, float]] = [dict() for _ in range(n + 1)]
    dist[0][fst.start] = 0.0
    for pos in range(n + 1):
        # relax epsilon-output arcs within the layer to a fixed point
        for _ in range(fst.num_states + 1):
            changed = False
            for state, d in list(dist[pos].items()):
                for arc in fst.arcs(state):
                    if arc.olabel != EPSILON:
                        continue
                    nd = d + arc.weight
                    if nd < dist[pos].get(arc.dst, math.inf) - 1e-15:
                        dist[pos][arc.dst] = nd
                        changed = True
            if not changed:
                break
        else:
            raise GraphError("epsilon-output relaxation did not converge (cycle with non-positive weight)")
        if pos == n:
            break
        for state, d in dist[pos].items():
            for arc in fst.arcs(state):
                if arc.olabel == words[pos]:
                    nd = d + arc.weight
                    if nd < dist[pos + 1].get(arc.dst, math.inf):
                        dist[pos + 1][arc.dst] = nd
    result = math.inf
    for state, d in dist[n].items():
        fw = fst.final_weight(state)
        if fw is not None:
            result = min(result, d + fw)
    return result
