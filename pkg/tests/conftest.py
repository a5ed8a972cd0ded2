"""Shared fixtures: toy lexicons, corpora, graphs and frame builders."""

import numpy as np
import pytest

from wordsync.ctc import FrameProbs
from wordsync.fst import compose_decoder, build_lexicon_fst
from wordsync.lm import lm_to_fst, train_bigram_kn
from wordsync.phonemes import ARPABET, BLANK
from wordsync.synth import LexiconEntry

# Fixed-length-3 pronunciations with pairwise distinct codes: concatenations
# segment uniquely, so a noiseless benchmark decodes exactly.
CLEAN_LEXICON = [
    LexiconEntry("red", ("R", "EH", "D")),
    LexiconEntry("blue", ("B", "L", "UW")),
    LexiconEntry("green", ("G", "R", "IY")),
    LexiconEntry("cat", ("K", "AE", "T")),
    LexiconEntry("dog", ("D", "AO", "G")),
    LexiconEntry("sun", ("S", "AH", "N")),
    LexiconEntry("map", ("M", "AE", "P")),
    LexiconEntry("fox", ("F", "AA", "K")),
    LexiconEntry("wind", ("W", "IH", "N")),
    LexiconEntry("top", ("T", "OW", "P")),
]

CLEAN_CORPUS = [
    ["red", "cat", "top"],
    ["blue", "dog", "sun"],
    ["green", "map", "fox"],
    ["cat", "red", "wind"],
    ["dog", "blue", "cat"],
    ["sun", "top", "red"],
    ["map", "green", "dog"],
    ["fox", "wind", "blue"],
    ["wind", "sun", "map"],
    ["top", "fox", "green"],
    ["red", "blue", "green"],
    ["cat", "dog", "sun"],
]

# Viseme minimal pairs: under {P,B,M}, {F,V}, {S,Z} confusion these words are
# nearly indistinguishable from frame evidence alone.
CONFUSION_LEXICON = [
    LexiconEntry("pat", ("P", "AE", "T")),
    LexiconEntry("bat", ("B", "AE", "T")),
    LexiconEntry("mat", ("M", "AE", "T")),
    LexiconEntry("fan", ("F", "AE", "N")),
    LexiconEntry("van", ("V", "AE", "N")),
    LexiconEntry("sip", ("S", "IH", "P")),
    LexiconEntry("zip", ("Z", "IH", "P")),
    LexiconEntry("peg", ("P", "EH", "G")),
    LexiconEntry("beg", ("B", "EH", "G")),
    LexiconEntry("mess", ("M", "EH", "S")),
]

CONFUSION_CORPUS = [
    ["pat", "fan", "sip"],
    ["bat", "van", "zip"],
    ["mat", "fan", "peg"],
    ["fan", "sip", "bat"],
    ["van", "mat", "mess"],
    ["sip", "peg", "pat"],
    ["zip", "beg", "van"],
    ["peg", "mess", "mat"],
    ["beg", "pat", "zip"],
    ["mess", "bat", "fan"],
    ["pat", "bat", "mat"],
    ["fan", "van", "sip"],
]


def build_graph(entries, corpus, discount=0.75):
    vocab = sorted({tok for sent in corpus for tok in sent})
    lm = train_bigram_kn(corpus, vocab, discount)
    graph = compose_decoder(build_lexicon_fst(entries), lm_to_fst(lm))
    return graph, lm


def one_hot_frames(symbols, inventory=ARPABET):
    """Rows with probability 1 on each symbol; use BLANK for blank frames."""
    table = (BLANK,) + tuple(inventory)
    rows = np.zeros((len(symbols), len(table)))
    for t, sym in enumerate(symbols):
        rows[t, table.index(sym)] = 1.0
    return FrameProbs.from_linear(table, rows)


def spell_with_blanks(entries, words, repeats=1):
    """Phoneme frame symbols for a word sequence: each phoneme repeated,
    blank-separated between words (and between repeated phonemes)."""
    pron = {e.word: e.phonemes for e in entries}
    symbols = []
    for word in words:
        if symbols:
            symbols.append(BLANK)
        prev = None
        for p in pron[word]:
            if p == prev:
                symbols.append(BLANK)
            symbols.extend([p] * repeats)
            prev = p
    return symbols


@pytest.fixture(scope="session")
def clean_graph():
    graph, _ = build_graph(CLEAN_LEXICON, CLEAN_CORPUS)
    return graph


@pytest.fixture(scope="session")
def confusion_graph():
    graph, _ = build_graph(CONFUSION_LEXICON, CONFUSION_CORPUS)
    return graph


@pytest.fixture(scope="session")
def homophone_graph():
    entries = [
        LexiconEntry("cat", ("K", "AE", "T")),
        LexiconEntry("see", ("S", "IY")),
        LexiconEntry("sea", ("S", "IY")),
    ]
    corpus = [["cat", "see"], ["sea", "cat"], ["see", "cat"], ["see", "sea"]]
    graph, lm = build_graph(entries, corpus)
    return graph, lm, entries
