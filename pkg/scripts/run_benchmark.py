#!/usr/bin/env python3
"""Desk-scale end-to-end experiment.

Builds a viseme-confusable lexicon and bigram model, synthesizes benchmarks
at several confusion levels, and compares standard CTC beam decoding against
interactive decoding driven by the simulated-user oracle.  Prints the action
table and the WER comparison per confusion level.

Usage: python scripts/run_benchmark.py [--n 50] [--seed 7]
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wordsync.decoder import standard_beam_decode
from wordsync.fst import build_lexicon_fst, compose_decoder
from wordsync.lm import lm_to_fst, train_bigram_kn
from wordsync.oracle import aggregate_stats, edit_distance, rank_histogram, run_oracle_session
from wordsync.synth import LexiconEntry, SynthConfig, make_benchmark

LEXICON = [
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
    LexiconEntry("red", ("R", "EH", "D")),
    LexiconEntry("lot", ("L", "AA", "T")),
]

CORPUS = [
    ["pat", "fan", "sip"], ["bat", "van", "zip"], ["mat", "fan", "peg"],
    ["fan", "sip", "bat"], ["van", "mat", "mess"], ["sip", "peg", "pat"],
    ["zip", "beg", "van"], ["peg", "mess", "mat"], ["beg", "pat", "zip"],
    ["mess", "bat", "fan"], ["red", "lot", "pat"], ["lot", "red", "fan"],
    ["pat", "red", "lot"], ["fan", "van", "sip"], ["pat", "bat", "mat"],
]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=50, help="utterances per confusion level")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--confusions", type=float, nargs="+", default=[0.0, 0.25, 0.5])
    args = parser.parse_args()

    vocab = sorted({w for s in CORPUS for w in s})
    lm = train_bigram_kn(CORPUS, vocab)
    graph = compose_decoder(build_lexicon_fst(LEXICON), lm_to_fst(lm))
    print(f"decoder graph: {graph.num_states} states, {graph.num_arcs} arcs")

    for mass in args.confusions:
        config = SynthConfig(seed=args.seed, blank_prob=0.15, confusion_mass=mass)
        items = make_benchmark(LEXICON, CORPUS, args.n, config)
        sessions = [run_oracle_session(graph, it.frames, it.transcript) for it in items]
        agg = aggregate_stats(sessions)
        std_edits = sum(
            edit_distance(it.transcript, standard_beam_decode(graph, it.frames)) for it in items
        )
        std_ref = sum(len(it.transcript) for it in items)
        print(f"\n=== confusion mass {mass} ({args.n} utterances) ===")
        print(agg.format_table())
        print(f"\nStandard              WER {100 * std_edits / std_ref:.1f}%")
        print(f"Interactive (oracle)  WER {100 * agg.pooled_wer:.1f}%")
        hist = rank_histogram(sessions)
        shown = ", ".join(f"{r}:{c}" for r, c in sorted(hist.items())[:8])
        print(f"selected-rank histogram (first buckets): {shown}")


if __name__ == "__main__":
    main()
