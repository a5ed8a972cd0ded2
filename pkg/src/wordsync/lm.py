"""Interpolated Kneser-Ney bigram language model and its compilation to a
backoff FST.

The model stores the raw KN pieces: discounted bigram probabilities
max(c(v,w)-D, 0)/c(v), interpolation weights lambda(v) = D*N1+(v,.)/c(v) and
continuation probabilities P_cont(w) = N1+(.,w)/N1+(.,.).  The smoothed
conditional is their combination,

    P(w|v) = max(c(v,w)-D, 0)/c(v) + lambda(v) * P_cont(w),

which per context sums to one over the event space (vocabulary plus the
sentence-end token).  Corpus tokens outside the vocabulary are mapped to the
unknown token before counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from wordsync.fst import EPSILON, WeightedFst

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"


class LmError(ValueError):
    """Invalid language-model input (empty corpus, bad discount, OOV query)."""


@dataclass(frozen=True)
class BigramLm:
    """Kneser-Ney bigram pieces; see the module docstring for the formulas.

    ``vocab`` lists the predictable word tokens (including the unknown token
    when OOV mapping produced it).  ``bigram`` holds the discounted part for
    seen pairs only; ``unigram_cont`` holds continuation probabilities for
    tokens with at least one distinct left context (including the sentence
    end); ``backoff`` holds lambda for every context, 1.0 for unseen ones.
    """

    vocab: tuple[str, ...]
    unigram_cont: Mapping[str, float]
    bigram: Mapping[tuple[str, str], float]
    backoff: Mapping[str, float]
    discount: float

    @property
    def event_words(self) -> tuple[str, ...]:
        """Tokens the model can predict (excludes the sentence end)."""
        return self.vocab

    def conditional(self, word: str, context: str) -> float:
        """Smoothed P(word | context); ``word`` may be the sentence end."""
        disc = self.bigram.get((context, word), 0.0)
        lam = self.backoff.get(context, 1.0)
        return disc + lam * self.unigram_cont.get(word, 0.0)

    def sentence_logprob(self, words: Sequence[str]) -> float:
        """log P(words </s> | <s>) under the smoothed model."""
        known = set(self.vocab)
        logp = 0.0
        context = BOS
        for w in words:
            if w not in known:
                raise LmError(f"word {w!r} is not in the model vocabulary")
            p = self.conditional(w, context)
            if p <= 0.0:
                return float("-inf")
            logp += math.log(p)
            context = w
        p_end = self.conditional(EOS, context)
        if p_end <= 0.0:
            return float("-inf")
        return logp + math.log(p_end)

    def distribution(self, context: str, support: Optional[Iterable[str]] = None):
        """(tokens, probabilities) over ``support`` plus </s>, renormalized.

        ``support`` defaults to the full vocabulary.  Used for sampling.
        """
        tokens = list(support) if support is not None else list(self.vocab)
        tokens.append(EOS)
        probs = [self.conditional(t, context) for t in tokens]
        total = sum(probs)
        if total <= 0.0:
            raise LmError(f"no probability mass on the requested support in context {context!r}")
        return tokens, [p / total for p in probs]


def train_bigram_kn(
    corpus: Sequence[Sequence[str]],
    vocab: Sequence[str],
    discount: float = 0.75,
) -> BigramLm:
    """Train an interpolated Kneser-Ney bigram model.

    Sentences are padded with <s>/</s>; tokens outside ``vocab`` are mapped
    to the unknown token, which joins the vocabulary when that happens.
    """
    if not corpus:
        raise LmError("empty corpus")
    if not (0.0 < discount < 1.0):
        raise LmError(f"discount must be in (0, 1), got {discount}")

    known = set(vocab)
    counts: dict[tuple[str, str], int] = {}
    saw_unk = False
    for sentence in corpus:
        context = BOS
        for token in sentence:
            if token not in known:
                token = UNK
                saw_unk = True
            counts[(context, token)] = counts.get((context, token), 0) + 1
            context = token
        counts[(context, EOS)] = counts.get((context, EOS), 0) + 1

    context_total: dict[str, int] = {}
    followers: dict[str, set[str]] = {}
    left_contexts: dict[str, set[str]] = {}
    for (v, w), c in counts.items():
        context_total[v] = context_total.get(v, 0) + c
        followers.setdefault(v, set()).add(w)
        left_contexts.setdefault(w, set()).add(v)

    total_types = len(counts)
    unigram_cont = {w: len(ctxs) / total_types for w, ctxs in left_contexts.items()}

    bigram = {
        (v, w): max(c - discount, 0.0) / context_total[v] for (v, w), c in counts.items()
    }
    backoff: dict[str, float] = {}
    vocab_eff = tuple(vocab) + ((UNK,) if saw_unk and UNK not in known else ())
    for v in (BOS,) + vocab_eff:
        total = context_total.get(v)
        if total:
            backoff[v] = discount * len(followers[v]) / total
        else:
            backoff[v] = 1.0

    return BigramLm(
        vocab=vocab_eff,
        unigram_cont=unigram_cont,
        bigram=bigram,
        backoff=backoff,
        discount=float(discount),
    )


def lm_to_fst(lm: BigramLm) -> WeightedFst:
    """Compile the bigram model to a backoff acceptor.

    One state per context plus a single backoff state.  Arcs for seen bigrams
    carry the full smoothed conditional, so the cheapest accepting path for
    any word sequence equals its direct model score; the backoff route
    (epsilon arc weighted -log lambda, then a continuation-probability
    unigram arc) is what realizes unseen bigrams.  The sentence end is a
    final weight rather than an arc.
    """
    fst = WeightedFst()
    contexts = [BOS] + sorted(lm.vocab)
    state_of = {v: fst.add_state() for v in contexts}
    backoff_state = fst.add_state()
    fst.set_start(state_of[BOS])

    followers: dict[str, list[str]] = {v: [] for v in contexts}
    for ctx, w in lm.bigram:
        if w != EOS:
            followers[ctx].append(w)

    for v in contexts:
        src = state_of[v]
        for w in sorted(followers[v]):
            p = lm.conditional(w, v)
            fst.add_arc(src, w, w, -math.log(p), state_of[w])
        lam = lm.backoff.get(v, 1.0)
        fst.add_arc(src, EPSILON, EPSILON, -math.log(lam), backoff_state)
        p_end = lm.conditional(EOS, v)
        if p_end > 0.0:
            fst.set_final(src, -math.log(p_end))
    for w in sorted(lm.vocab):
        p = lm.unigram_cont.get(w, 0.0)
        if p > 0.0:
            fst.add_arc(backoff_state, w, w, -math.log(p), state_of[w])
    p_end_cont = lm.unigram_cont.get(EOS, 0.0)
    if p_end_cont > 0.0:
        fst.set_final(backoff_state, -math.log(p_end_cont))
    return fst
