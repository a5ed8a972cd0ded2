"""Per-frame phoneme posteriors and incremental CTC prefix probabilities.

For a phoneme prefix l at frame count t we track two log-space buckets:
``log_p_b`` (alignments ending in blank) and ``log_p_nb`` (alignments ending
in the final phoneme of l).  Advancing a source entry one frame applies

    p_b(l, t+1)    = row[blank] * (p_b(l,t) + p_nb(l,t))          (stay)
    p_nb(l, t+1)   = row[last(l)] * p_nb(l,t)                     (stay)
    p_nb(l+p, t+1) = row[p] * (p_b + p_nb)   if p != last(l)      (extend)
    p_nb(l+p, t+1) = row[p] * p_b            if p == last(l)      (extend)

where row is the frame consumed going from t to t+1 (0-based row t).  A
target entry can receive one stay contribution and one extend contribution;
they accumulate by log-sum-exp and each is applied at most once, so repeated
advances of the same key are no-ops returning the stored values.

Prefixes are interned as nodes of a prefix tree (phonemes are column indices
of the frame matrix, blank is column 0), so table keys hash in O(1) and no
sequence is copied per expansion.  A brute-force oracle that enumerates raw
alignments and collapses them is provided for verification.
"""

from __future__ import annotations

import math
import struct
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

_NEG_INF = float("-inf")


class CtcError(ValueError):
    """Invalid frame matrix or prefix-table operation."""


class MissingEntryError(KeyError):
    """A (prefix, t) key required as an advance source is absent."""


def log_add(a: float, b: float) -> float:
    """log(exp(a) + exp(b)), returning -inf when both inputs are -inf."""
    if a < b:
        a, b = b, a
    if b == _NEG_INF:
        return a
    return a + math.log1p(math.exp(b - a))


# ---------------------------------------------------------------------------
# Frame probabilities
# ---------------------------------------------------------------------------


class FrameProbs:
    """T x (P+1) log-probability matrix over phonemes, blank at column 0."""

    TEXT_HEADER = "wordsync-frames 1"
    BINARY_MAGIC = b"WSFRAMES1\n"

    def __init__(self, phoneme_table: Sequence[str], log_probs: np.ndarray):
        table = tuple(phoneme_table)
        probs = np.asarray(log_probs, dtype=np.float64)
        if probs.ndim != 2:
            raise CtcError(f"log_probs must be 2-D, got shape {probs.shape}")
        T, cols = probs.shape
        if T < 1:
            raise CtcError("need at least one frame")
        if len(table) != cols:
            raise CtcError(f"phoneme table has {len(table)} symbols but matrix has {cols} columns")
        if len(set(table)) != len(table):
            raise CtcError("phoneme table has duplicate symbols")
        if np.any(np.isnan(probs)) or np.any(probs == np.inf):
            raise CtcError("log probabilities must be finite or -inf")
        row_sums = np.exp(probs).sum(axis=1)
        if np.any(np.abs(row_sums - 1.0) > 1e-6):
            bad = int(np.argmax(np.abs(row_sums - 1.0)))
            raise CtcError(f"row {bad} sums to {row_sums[bad]!r}, expected 1 within 1e-6")
        self.phoneme_table = table
        self.log_probs = probs
        self.log_probs.setflags(write=False)
        self._rows: list[Optional[tuple[float, ...]]] = [None] * T
        self._index = {sym: i for i, sym in enumerate(table)}

    @classmethod
    def from_linear(cls, phoneme_table: Sequence[str], probs) -> "FrameProbs":
        with np.errstate(divide="ignore"):
            return cls(phoneme_table, np.log(np.asarray(probs, dtype=np.float64)))

    @property
    def num_frames(self) -> int:
        return self.log_probs.shape[0]

    @property
    def num_phonemes(self) -> int:
        """Count of real phonemes (excluding blank)."""
        return len(self.phoneme_table) - 1

    @property
    def phonemes(self) -> tuple[str, ...]:
        return self.phoneme_table[1:]

    def row(self, t: int) -> tuple[float, ...]:
        cached = self._rows[t]
        if cached is None:
            cached = tuple(float(x) for x in self.log_probs[t])
            self._rows[t] = cached
        return cached

    def index_of(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise CtcError(f"symbol {symbol!r} not in phoneme table") from None

    # -- serialization ----------------------------------------------------

    def to_text(self) -> str:
        lines = [self.TEXT_HEADER]
        lines.append("phonemes " + " ".join(self.phoneme_table))
        lines.append(f"frames {self.num_frames}")
        for t in range(self.num_frames):
            lines.append(" ".join(repr(float(x)) for x in self.log_probs[t]))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "FrameProbs":
        lines = text.splitlines()
        if not lines or lines[0].strip() != cls.TEXT_HEADER:
            raise CtcError(f"bad frames header (expected {cls.TEXT_HEADER!r})")
        if not lines[1].startswith("phonemes "):
            raise CtcError("missing phonemes line")
        table = lines[1].split()[1:]
        if not lines[2].startswith("frames "):
            raise CtcError("missing frames line")
        T = int(lines[2].split()[1])
        rows = [[float(x) for x in lines[3 + t].split()] for t in range(T)]
        return cls(table, np.array(rows, dtype=np.float64))

    def to_binary(self) -> bytes:
        header = " ".join(self.phoneme_table).encode("utf-8") + b"\n"
        T, cols = self.log_probs.shape
        return (
            self.BINARY_MAGIC
            + struct.pack("<I", len(header))
            + header
            + struct.pack("<QQ", T, cols)
            + self.log_probs.astype("<f8").tobytes()
        )

    @classmethod
    def from_binary(cls, blob: bytes) -> "FrameProbs":
        if not blob.startswith(cls.BINARY_MAGIC):
            raise CtcError("bad frames binary magic")
        off = len(cls.BINARY_MAGIC)
        (hlen,) = struct.unpack_from("<I", blob, off)
        off += 4
        table = blob[off : off + hlen].decode("utf-8").split()
        off += hlen
        T, cols = struct.unpack_from("<QQ", blob, off)
        off += 16
        probs = np.frombuffer(blob, dtype="<f8", count=T * cols, offset=off).reshape(T, cols)
        return cls(table, probs.copy())

    def save(self, path, binary: bool = True) -> None:
        if binary:
            with open(path, "wb") as fh:
                fh.write(self.to_binary())
        else:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "FrameProbs":
        with open(path, "rb") as fh:
            blob = fh.read()
        if blob.startswith(cls.BINARY_MAGIC):
            return cls.from_binary(blob)
        return cls.from_text(blob.decode("utf-8"))


# ---------------------------------------------------------------------------
# Prefix tree and table
# ---------------------------------------------------------------------------


class PrefixNode:
    """Interned phoneme prefix; compare and hash by identity via ``uid``."""

    __slots__ = ("uid", "parent", "symbol", "length", "_children")

    def __init__(self, uid: int, parent: Optional["PrefixNode"], symbol: int):
        self.uid = uid
        self.parent = parent
        self.symbol = symbol  # column index of the last phoneme; 0 for the root
        self.length = 0 if parent is None else parent.length + 1
        self._children: dict[int, "PrefixNode"] = {}

    def symbols(self) -> tuple[int, ...]:
        out = []
        node = self
        while node.parent is not None:
            out.append(node.symbol)
            node = node.parent
        return tuple(reversed(out))

    def __repr__(self) -> str:
        return f"PrefixNode({self.symbols()!r})"


class PrefixProbs(NamedTuple):
    log_p_b: float
    log_p_nb: float

    @property
    def total(self) -> float:
        return log_add(self.log_p_b, self.log_p_nb)


class _Entry:
    __slots__ = ("log_p_b", "log_p_nb", "stay_done", "extend_done")

    def __init__(self, log_p_b: float = _NEG_INF, log_p_nb: float = _NEG_INF):
        self.log_p_b = log_p_b
        self.log_p_nb = log_p_nb
        self.stay_done = False
        self.extend_done = False

    def probs(self) -> PrefixProbs:
        return PrefixProbs(self.log_p_b, self.log_p_nb)


class PrefixTable:
    """Map from (interned prefix, frame count) to the two probability buckets."""

    def __init__(self) -> None:
        self.root = PrefixNode(0, None, 0)
        self._next_uid = 1
        self._entries: dict[tuple[int, int], _Entry] = {}
        init = _Entry(0.0, _NEG_INF)
        init.stay_done = True  # nothing advances into t=0
        init.extend_done = True
        self._entries[(self.root.uid, 0)] = init

    def child(self, prefix: PrefixNode, symbol: int) -> PrefixNode:
        node = prefix._children.get(symbol)
        if node is None:
            node = PrefixNode(self._next_uid, prefix, symbol)
            self._next_uid += 1
            prefix._children[symbol] = node
        return node

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: tuple[PrefixNode, int]) -> bool:
        prefix, t = key
        return (prefix.uid, t) in self._entries

    def entry(self, prefix: PrefixNode, t: int) -> _Entry:
        try:
            return self._entries[(prefix.uid, t)]
        except KeyError:
            raise MissingEntryError(f"no entry for prefix {prefix.symbols()} at t={t}") from None

    def _target(self, prefix: PrefixNode, t: int) -> _Entry:
        key = (prefix.uid, t)
        entry = self._entries.get(key)
        if entry is None:
            entry = _Entry()
            self._entries[key] = entry
        return entry

    def items(self):
        return self._entries.items()

    def prune_to_prefixes(self, survivors: Iterable[PrefixNode]) -> None:
        """Drop entries whose prefix does not extend any surviving prefix.

        Keeps every entry (at any t) whose prefix has a survivor as a
        non-strict ancestor, preserving the accumulated values and flags for
        the continuations the search can still reach.
        """
        keep_uids = {node.uid for node in survivors}
        if not keep_uids:
            self._entries.clear()
            return
        # uid -> node lookup by walking the interner from each entry prefix is
        # not available; instead record ancestry with a per-node cache.
        cache: dict[int, bool] = {}

        def extends(node: PrefixNode) -> bool:
            probe = node
            path = []
            verdict = None
            while probe is not None:
                known = cache.get(probe.uid)
                if known is not None:
                    verdict = known
                    break
                if probe.uid in keep_uids:
                    verdict = True
                    break
                path.append(probe)
                probe = probe.parent
            if verdict is None:
                verdict = False
            for n in path:
                cache[n.uid] = verdict
            return verdict

        nodes_by_uid: dict[int, PrefixNode] = {}

        def index(node: PrefixNode) -> None:
            nodes_by_uid[node.uid] = node
            for ch in node._children.values():
                index(ch)

        index(self.root)
        self._entries = {
            (uid, t): entry
            for (uid, t), entry in self._entries.items()
            if extends(nodes_by_uid[uid])
        }


def init_prefix_table() -> PrefixTable:
    """Fresh table holding exactly the empty prefix at t=0 with (1, 0) mass."""
    return PrefixTable()


def advance_stay(table: PrefixTable, prefix: PrefixNode, t: int, frames: FrameProbs) -> PrefixProbs:
    """Advance (prefix, t) one frame without emitting; returns (prefix, t+1)."""
    if t + 1 > frames.num_frames:
        raise CtcError(f"cannot advance past the last frame (t={t}, T={frames.num_frames})")
    src = table.entry(prefix, t)
    target = table._target(prefix, t + 1)
    if not target.stay_done:
        row = frames.row(t)
        target.log_p_b = log_add(target.log_p_b, row[0] + log_add(src.log_p_b, src.log_p_nb))
        if prefix.parent is not None:
            target.log_p_nb = log_add(target.log_p_nb, row[prefix.symbol] + src.log_p_nb)
        target.stay_done = True
    return target.probs()


def advance_extend(
    table: PrefixTable, prefix: PrefixNode, symbol: int, t: int, frames: FrameProbs
) -> PrefixProbs:
    """Advance (prefix, t) one frame emitting ``symbol``; returns (prefix+symbol, t+1)."""
    if t + 1 > frames.num_frames:
        raise CtcError(f"cannot advance past the last frame (t={t}, T={frames.num_frames})")
    if not (1 <= symbol < len(frames.phoneme_table)):
        raise CtcError(f"phoneme column {symbol} out of range")
    src = table.entry(prefix, t)
    child = table.child(prefix, symbol)
    target = table._target(child, t + 1)
    if not target.extend_done:
        row = frames.row(t)
        if prefix.parent is not None and symbol == prefix.symbol:
            contrib = row[symbol] + src.log_p_b
        else:
            contrib = row[symbol] + log_add(src.log_p_b, src.log_p_nb)
        target.log_p_nb = log_add(target.log_p_nb, contrib)
        target.extend_done = True
    return target.probs()


def prefix_prob(table: PrefixTable, prefix: PrefixNode, t: int) -> float:
    """log(p_b + p_nb) for the entry; raises MissingEntryError when absent."""
    return table.entry(prefix, t).probs().total


# ---------------------------------------------------------------------------
# Brute-force verification oracle
# ---------------------------------------------------------------------------

_BRUTE_MAX_T = 8
_BRUTE_MAX_P = 4


def _check_brute_limits(frames: FrameProbs, t: int) -> None:
    if t > frames.num_frames:
        raise CtcError(f"t={t} exceeds T={frames.num_frames}")
    if frames.num_frames > _BRUTE_MAX_T or t > _BRUTE_MAX_T:
        raise CtcError(f"brute force limited to T <= {_BRUTE_MAX_T}")
    if frames.num_phonemes > _BRUTE_MAX_P:
        raise CtcError(f"brute force limited to P <= {_BRUTE_MAX_P}")


def brute_force_prefix_buckets(
    frames: FrameProbs, prefix: Sequence[int], t: int
) -> PrefixProbs:
    """Enumerate all (P+1)^t alignments and sum those collapsing to ``prefix``.

    The collapse removes consecutive repeats first, then blanks.  Sums are
    split into the two buckets by whether the final alignment symbol is
    blank.  Tractable only for tiny instances; used to verify the
    incremental updates.
    """
    _check_brute_limits(frames, t)
    target = tuple(prefix)
    n_sym = len(frames.phoneme_table)
    log_p_b = _NEG_INF
    log_p_nb = _NEG_INF
    if t == 0:
        if target == ():
            log_p_b = 0.0
        return PrefixProbs(log_p_b, log_p_nb)

    stack = [(0, (), 0, 0.0)]  # (frames consumed, collapsed, previous symbol, logp)
    while stack:
        depth, collapsed, prev, logp = stack.pop()
        if depth == t:
            if collapsed == target:
                if prev == 0:
                    log_p_b = log_add(log_p_b, logp)
                else:
                    log_p_nb = log_add(log_p_nb, logp)
            continue
        row = frames.row(depth)
        for s in range(n_sym):
            lp = logp + row[s]
            if lp == _NEG_INF:
                continue
            if s == prev:
                nxt = collapsed
            elif s == 0:
                nxt = collapsed
            else:
                nxt = collapsed + (s,)
            # no point extending past the target
            if nxt != target[: len(nxt)]:
                continue
            stack.append((depth + 1, nxt, s, lp))
    return PrefixProbs(log_p_b, log_p_nb)


def brute_force_prefix_prob(frames: FrameProbs, prefix: Sequence[int], t: int) -> float:
    """Total log-probability of observing ``prefix`` after t frames (brute force)."""
    return brute_force_prefix_buckets(frames, prefix, t).total


def brute_force_prefix_table(
    frames: FrameProbs, max_t: Optional[int] = None
) -> dict[tuple[tuple[int, ...], int], PrefixProbs]:
    """All (collapsed prefix, t) buckets up to ``max_t``, by full enumeration.

    One sweep of the alignment tree; the test-friendly bulk variant of
    ``brute_force_prefix_buckets``.
    """
    T = frames.num_frames if max_t is None else max_t
    _check_brute_limits(frames, T)
    n_sym = len(frames.phoneme_table)
    buckets: dict[tuple[tuple[int, ...], int], list[float]] = {
        ((), 0): [0.0, _NEG_INF]
    }
    stack = [(0, (), 0, 0.0)]
    while stack:
        depth, collapsed, prev, logp = stack.pop()
        if depth == T:
            continue
        row = frames.row(depth)
        for s in range(n_sym):
            lp = logp + row[s]
            if lp == _NEG_INF:
                continue
            nxt = collapsed if (s == prev or s == 0) else collapsed + (s,)
            entry = buckets.setdefault((nxt, depth + 1), [_NEG_INF, _NEG_INF])
            idx = 0 if s == 0 else 1
            entry[idx] = log_add(entry[idx], lp)
            stack.append((depth + 1, nxt, s, lp))
    return {key: PrefixProbs(pb, pnb) for key, (pb, pnb) in buckets.items()}
