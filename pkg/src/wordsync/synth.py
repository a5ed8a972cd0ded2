"""Desk-scale data plumbing: lexicon and corpus ingestion plus a synthetic
frame-probability generator that stands in for a phoneme recognizer.

Frame rows are built from three pieces: a blank floor, the target phoneme
mass smeared over its confusion group, and temperature noise.  For target
phoneme q with blank probability b, confusion mass m and temperature tau:

    structured[blank] = b
    structured[q]     = (1 - b) * (1 - m)        (all of 1-b when q has no group)
    structured[other] = (1 - b) * m / |group - q|  for the other group members
    row = (1 - eta) * structured + eta * uniform,  eta = 1 - exp(-tau)

Segment durations are drawn uniformly from [frames_min, frames_max]; one
blank-dominated boundary frame pads each end of the utterance and separates
equal consecutive phonemes (required for the CTC collapse to keep both).
Randomness comes from numpy's PCG64 generator seeded from the config, so a
given (sequence, config) always produces the same matrix bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from wordsync.ctc import FrameProbs
from wordsync.fst import UnknownSymbolError
from wordsync.lm import BigramLm, train_bigram_kn
from wordsync.phonemes import ARPABET, BLANK, DEFAULT_CONFUSION_GROUPS


class LexiconError(ValueError):
    """Malformed lexicon input."""


@dataclass(frozen=True)
class LexiconEntry:
    word: str
    phonemes: tuple[str, ...]
    weight: float = 0.0  # negative-log pronunciation probability


def parse_lexicon(text: str, inventory: Optional[Sequence[str]] = ARPABET) -> list[LexiconEntry]:
    """Parse ``WORD<TAB>PH1 PH2 ...[<TAB>weight]`` lines.

    Duplicate (word, pronunciation) lines collapse keeping the minimum
    weight; entry order otherwise follows the file.
    """
    allowed = set(inventory) if inventory is not None else None
    order: list[tuple[str, tuple[str, ...]]] = []
    best: dict[tuple[str, tuple[str, ...]], float] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise LexiconError(f"line {lineno}: expected WORD<TAB>PHONEMES[<TAB>WEIGHT], got {raw!r}")
        word = fields[0].strip()
        phonemes = tuple(fields[1].split())
        if not word or not phonemes:
            raise LexiconError(f"line {lineno}: empty word or pronunciation in {raw!r}")
        if allowed is not None:
            for p in phonemes:
                if p not in allowed:
                    raise UnknownSymbolError(
                        f"line {lineno}: unknown phoneme {p!r} in entry for word {word!r}"
                    )
        weight = 0.0
        if len(fields) == 3:
            try:
                weight = float(fields[2])
            except ValueError:
                raise LexiconError(f"line {lineno}: bad weight field {fields[2]!r}") from None
        key = (word, phonemes)
        if key not in best:
            order.append(key)
            best[key] = weight
        else:
            best[key] = min(best[key], weight)
    return [LexiconEntry(word, phonemes, best[(word, phonemes)]) for word, phonemes in order]


def parse_corpus(text: str) -> list[list[str]]:
    """One whitespace-tokenized sentence per line; blank lines are skipped."""
    return [line.split() for line in text.splitlines() if line.strip()]


# ---------------------------------------------------------------------------
# Synthetic frame probabilities
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SynthConfig:
    frames_min: int = 2
    frames_max: int = 4
    blank_prob: float = 0.2
    noise_temperature: float = 0.0
    confusion_groups: tuple[tuple[str, ...], ...] = DEFAULT_CONFUSION_GROUPS
    confusion_mass: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not (1 <= self.frames_min <= self.frames_max):
            raise ValueError("need 1 <= frames_min <= frames_max")
        if not (0.0 <= self.blank_prob < 1.0):
            raise ValueError("blank_prob must be in [0, 1)")
        if not (0.0 <= self.confusion_mass <= 1.0):
            raise ValueError("confusion_mass must be in [0, 1]")
        if self.noise_temperature < 0.0:
            raise ValueError("noise_temperature must be >= 0")


def _confusion_partners(config: SynthConfig, phoneme: str) -> tuple[str, ...]:
    for group in config.confusion_groups:
        if phoneme in group:
            return tuple(p for p in group if p != phoneme)
    return ()


def _structured_row(inventory_index: dict[str, int], config: SynthConfig, target: Optional[str]) -> np.ndarray:
    row = np.zeros(len(inventory_index) + 1)
    b = config.blank_prob if target is not None else 1.0
    row[0] = b
    if target is not None:
        share = 1.0 - b
        partners = _confusion_partners(config, target) if config.confusion_mass > 0 else ()
        if partners:
            row[inventory_index[target]] = share * (1.0 - config.confusion_mass)
            for p in partners:
                row[inventory_index[p]] += share * config.confusion_mass / len(partners)
        else:
            row[inventory_index[target]] = share
    return row


def synthesize_frame_probs(
    phoneme_seq: Sequence[str],
    inventory: Sequence[str],
    config: SynthConfig,
) -> FrameProbs:
    """Emit a frame matrix concentrated on ``phoneme_seq`` (see module docs)."""
    seq = tuple(phoneme_seq)
    if not seq:
        raise ValueError("empty phoneme sequence")
    inv = tuple(inventory)
    index = {p: i + 1 for i, p in enumerate(inv)}
    for p in seq:
        if p not in index:
            raise UnknownSymbolError(f"phoneme {p!r} not in the inventory")
    rng = np.random.default_rng(config.seed)
    eta = 1.0 - math.exp(-config.noise_temperature)
    uniform = np.full(len(inv) + 1, 1.0 / (len(inv) + 1))

    def emit(target: Optional[str]) -> np.ndarray:
        structured = _structured_row(index, config, target)
        return (1.0 - eta) * structured + eta * uniform

    rows = [emit(None)]
    previous = None
    for p in seq:
        if p == previous:
            rows.append(emit(None))
        duration = int(rng.integers(config.frames_min, config.frames_max + 1))
        for _ in range(duration):
            rows.append(emit(p))
        previous = p
    rows.append(emit(None))
    probs = np.stack(rows)
    return FrameProbs.from_linear((BLANK,) + inv, probs)


# ---------------------------------------------------------------------------
# Benchmarks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BenchmarkItem:
    uid: str
    transcript: tuple[str, ...]
    frames: FrameProbs
    seed: int


def _utterance_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence((base_seed, 2, index)).generate_state(1, np.uint64)[0])


def sample_transcript(
    lm: BigramLm,
    lexicon_words: set[str],
    rng: np.random.Generator,
    max_words: int = 8,
    max_attempts: int = 100,
) -> tuple[str, ...]:
    """Sample a nonempty word sequence from the bigram model, restricted to
    words the lexicon can pronounce."""
    from wordsync.lm import BOS, EOS

    support = sorted(w for w in lm.vocab if w in lexicon_words)
    if not support:
        raise ValueError("no language-model word has a pronunciation")
    for _ in range(max_attempts):
        words: list[str] = []
        context = BOS
        while len(words) < max_words:
            tokens, probs = lm.distribution(context, support)
            pick = tokens[rng.choice(len(tokens), p=np.array(probs))]
            if pick == EOS:
                break
            words.append(pick)
            context = pick
        if words:
            return tuple(words)
    raise RuntimeError("failed to sample a nonempty transcript")


def sample_pronunciation(
    entries: Sequence[LexiconEntry], word: str, rng: np.random.Generator
) -> tuple[str, ...]:
    """Pick a pronunciation for ``word`` with probability proportional to
    exp(-entry weight)."""
    options = [e for e in entries if e.word == word]
    if not options:
        raise LexiconError(f"word {word!r} has no pronunciation")
    if len(options) == 1:
        return options[0].phonemes
    weights = np.array([math.exp(-e.weight) for e in options])
    weights /= weights.sum()
    return options[int(rng.choice(len(options), p=weights))].phonemes


def make_benchmark(
    lexicon: Sequence[LexiconEntry],
    lm_corpus: Sequence[Sequence[str]],
    n_utterances: int,
    config: SynthConfig,
    inventory: Sequence[str] = ARPABET,
    vocab: Optional[Sequence[str]] = None,
    discount: float = 0.75,
    max_words: int = 8,
) -> list[BenchmarkItem]:
    """Sample transcripts from a bigram model over ``lm_corpus`` and render
    each to synthetic frame probabilities; reproducible from config.seed."""
    if n_utterances < 1:
        raise ValueError("need n_utterances >= 1")
    entries = list(lexicon)
    lex_words = {e.word for e in entries}
    if vocab is None:
        vocab = sorted({tok for sent in lm_corpus for tok in sent})
    lm = train_bigram_kn(lm_corpus, vocab, discount)
    text_rng = np.random.default_rng(np.random.SeedSequence((config.seed, 1)))
    items = []
    for i in range(n_utterances):
        transcript = sample_transcript(lm, lex_words, text_rng, max_words)
        phonemes: list[str] = []
        for word in transcript:
            phonemes.extend(sample_pronunciation(entries, word, text_rng))
        seed = _utterance_seed(config.seed, i)
        frames = synthesize_frame_probs(phonemes, inventory, replace(config, seed=seed))
        items.append(BenchmarkItem(f"utt{i:04d}", transcript, frames, seed))
    return items
