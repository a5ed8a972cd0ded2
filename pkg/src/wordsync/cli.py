"""Command-line entry points: graph building, synthetic benchmarks, batch
evaluation, a manual decode REPL, and the session service.

Exit codes: 0 success, 1 usage error, 2 data error (missing or malformed
inputs).  All randomized commands take --seed and are reproducible bit for
bit.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from collections import Counter
from pathlib import Path

import numpy as np

from wordsync.ctc import CtcError, FrameProbs
from wordsync.decoder import (
    DecodeConfig,
    DecodeError,
    InteractionOutcome,
    interactive_decode,
    standard_beam_decode,
)
from wordsync.fst import GraphError, UnknownSymbolError, WeightedFst, build_lexicon_fst, compose_decoder
from wordsync.lm import LmError, lm_to_fst, train_bigram_kn
from wordsync.oracle import aggregate_stats, histogram_csv, rank_histogram, run_oracle_session, wer
from wordsync.phonemes import ARPABET
from wordsync.synth import (
    LexiconError,
    SynthConfig,
    make_benchmark,
    parse_corpus,
    parse_lexicon,
)

USAGE_EXIT = 1
DATA_EXIT = 2

_DATA_ERRORS = (
    LexiconError,
    GraphError,
    UnknownSymbolError,
    CtcError,
    LmError,
    DecodeError,
    OSError,
    json.JSONDecodeError,
    ValueError,
)


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--beam-width", type=int, default=200)
    parser.add_argument("--fst-branch-cap", type=int, default=20)
    parser.add_argument("--candidate-cap", type=int, default=100)
    parser.add_argument("--phoneme-floor", type=float, default=math.log(1e-5))
    parser.add_argument(
        "--auto-accept-threshold",
        type=float,
        default=None,
        help="score gap at which interaction points are skipped (omit to always ask)",
    )


def _config_from_args(args) -> DecodeConfig:
    return DecodeConfig(
        beam_width=args.beam_width,
        fst_branch_cap=args.fst_branch_cap,
        candidate_cap=args.candidate_cap,
        phoneme_floor=args.phoneme_floor,
        auto_accept_threshold=args.auto_accept_threshold,
    )


# ---------------------------------------------------------------------------
# build
# ---------------------------------------------------------------------------


def cmd_build(args) -> int:
    lexicon_text = _read_text(args.lexicon)
    corpus = parse_corpus(_read_text(args.corpus))
    if not corpus:
        raise LmError(f"corpus file {args.corpus} has no sentences")
    entries = parse_lexicon(lexicon_text)

    freq = Counter(tok for sent in corpus for tok in sent)
    vocab = [w for w, _ in sorted(freq.items(), key=lambda kv: (-kv[1], kv[0]))[: args.vocab_size]]
    lm = train_bigram_kn(corpus, vocab, args.discount)

    known = set(lm.vocab)
    kept = [e for e in entries if e.word in known]
    dropped = len(entries) - len(kept)
    if not kept:
        raise LexiconError("no lexicon entry survives the vocabulary cut")
    lexicon_fst = build_lexicon_fst(kept)
    grammar_fst = lm_to_fst(lm)
    decoder_fst = compose_decoder(lexicon_fst, grammar_fst)
    decoder_fst.validate()
    decoder_fst.save(args.out)
    print(f"lexicon entries: {len(kept)} kept, {dropped} outside the vocabulary")
    print(f"L: {lexicon_fst.num_states} states, {lexicon_fst.num_arcs} arcs")
    print(f"G: {grammar_fst.num_states} states, {grammar_fst.num_arcs} arcs")
    print(f"L.G: {decoder_fst.num_states} states, {decoder_fst.num_arcs} arcs -> {args.out}")
    return 0


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------


def cmd_synth(args) -> int:
    entries = parse_lexicon(_read_text(args.lexicon))
    corpus = parse_corpus(_read_text(args.corpus))
    groups = tuple(
        tuple(g.split(",")) for g in args.confusion_groups.split(";") if g
    )
    config = SynthConfig(
        frames_min=args.frames_min,
        frames_max=args.frames_max,
        blank_prob=args.blank_prob,
        noise_temperature=args.temperature,
        confusion_groups=groups,
        confusion_mass=args.confusion_mass,
        seed=args.seed,
    )
    items = make_benchmark(entries, corpus, args.n, config, max_words=args.max_words)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.jsonl"
    with open(manifest_path, "w", encoding="utf-8") as fh:
        for item in items:
            frames_path = out_dir / f"{item.uid}.frames"
            item.frames.save(frames_path, binary=True)
            fh.write(
                json.dumps(
                    {
                        "id": item.uid,
                        "transcript": list(item.transcript),
                        "frames_path": frames_path.name,
                        "seed": item.seed,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    print(f"wrote {len(items)} utterances to {out_dir} (manifest.jsonl)")
    return 0


def load_manifest(path: str) -> list[dict]:
    base = Path(path).parent
    items = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            frames_path = Path(record["frames_path"])
            if not frames_path.is_absolute():
                frames_path = base / frames_path
            record["frames_path"] = str(frames_path)
            items.append(record)
    return items


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------


def cmd_eval(args) -> int:
    graph = WeightedFst.load(args.graph)
    manifest = load_manifest(args.manifest)
    config = _config_from_args(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    run_oracle = args.mode in ("oracle", "both")
    run_standard = args.mode in ("standard", "both")

    sessions = []
    standard_rows = []
    std_edits = 0
    std_ref = 0
    for record in manifest:
        frames = FrameProbs.load(record["frames_path"])
        reference = record["transcript"]
        if run_oracle:
            sessions.append(run_oracle_session(graph, frames, reference, config))
        if run_standard:
            hyp = standard_beam_decode(graph, frames, config)
            e = _edits(reference, hyp)
            std_edits += e
            std_ref += len(reference)
            standard_rows.append(
                {
                    "id": record["id"],
                    "reference": list(reference),
                    "hypothesis": list(hyp),
                    "wer": e / len(reference),
                }
            )

    report = {"mode": args.mode, "utterances": len(manifest)}
    table_lines = []
    if run_oracle:
        agg = aggregate_stats(sessions)
        hist = rank_histogram(sessions)
        with open(out_dir / "sessions.jsonl", "w", encoding="utf-8") as fh:
            for record, s in zip(manifest, sessions):
                fh.write(
                    json.dumps(
                        {
                            "id": record["id"],
                            "reference": list(s.reference),
                            "hypothesis": list(s.hypothesis),
                            "records": [[a, r] for a, r in s.records],
                            "interaction_points": s.interaction_points,
                            "auto_accepted": s.auto_accepted,
                            "wer": s.wer,
                        },
                        sort_keys=True,
                    )
                    + "\n"
                )
        (out_dir / "ranks.csv").write_text(histogram_csv(hist), encoding="utf-8")
        report["oracle"] = {
            "counts": agg.counts,
            "terminal_not_found": agg.terminal_not_found,
            "counted_points": agg.counted_points,
            "total_points": agg.total_points,
            "percentages": agg.percentages,
            "success_rate": agg.success_rate,
            "success_excl_first_count": agg.success_excl_first_count,
            "success_excl_first_rate": agg.success_excl_first_rate,
            "wer": agg.pooled_wer,
        }
        table_lines.append(agg.format_table())
    if run_standard:
        with open(out_dir / "standard.jsonl", "w", encoding="utf-8") as fh:
            for row in standard_rows:
                fh.write(json.dumps(row, sort_keys=True) + "\n")
        report["standard"] = {"wer": std_edits / std_ref if std_ref else 0.0}

    wer_rows = []
    if run_standard:
        wer_rows.append(("Standard", report["standard"]["wer"]))
    if run_oracle:
        wer_rows.append(("Interactive (oracle)", report["oracle"]["wer"]))
    if wer_rows:
        width = max(len(name) for name, _ in wer_rows)
        table_lines.append("\n".join(
            [f"{'Decoding method':<{width}}  WER"]
            + [f"{name:<{width}}  {100.0 * value:.1f}%" for name, value in wer_rows]
        ))

    (out_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    table_text = "\n\n".join(table_lines) + "\n" if table_lines else ""
    (out_dir / "table.txt").write_text(table_text, encoding="utf-8")
    sys.stdout.write(table_text)
    return 0


def _edits(reference, hypothesis) -> int:
    from wordsync.oracle import edit_distance

    return edit_distance(reference, hypothesis)


# ---------------------------------------------------------------------------
# decode
# ---------------------------------------------------------------------------


def cmd_decode(args) -> int:
    graph = WeightedFst.load(args.graph)
    frames = FrameProbs.load(args.frames)
    config = _config_from_args(args)

    def chooser(candidates):
        print(f"-- candidates (position {chooser.position}) --")
        for c in candidates[: args.show]:
            print(f"  [{c.rank}] {c.word}  score={c.score:.4f}")
        while True:
            line = sys.stdin.readline()
            if not line:
                return InteractionOutcome(stop=True)
            line = line.strip()
            if line in ("stop", "s", "q"):
                return InteractionOutcome(stop=True)
            if line.isdigit() and int(line) < len(candidates):
                chooser.position += 1
                return InteractionOutcome(selected=candidates[int(line)].word)
            matches = [c for c in candidates if c.word == line]
            if matches:
                chooser.position += 1
                return InteractionOutcome(selected=matches[0].word)
            print(f"  (no candidate {line!r}; enter a rank, a word, or 'stop')")

    chooser.position = 0
    result = interactive_decode(graph, frames, chooser, config)
    print("transcript:", " ".join(result.transcript))
    return 0


# ---------------------------------------------------------------------------
# serve
# ---------------------------------------------------------------------------


def cmd_serve(args) -> int:
    from wordsync.service import serve_sessions

    graph = WeightedFst.load(args.graph)
    config = _config_from_args(args)
    serve_sessions(
        graph,
        host=args.host,
        socket_port=args.port,
        http_port=args.http_port,
        default_config=config,
        idle_timeout=args.idle_timeout,
        static_dir=args.static,
    )
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wordsync", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="compile lexicon + corpus into a decoder graph")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, default=1000)
    p.add_argument("--discount", type=float, default=0.75)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("synth", help="generate a synthetic benchmark")
    p.add_argument("--lexicon", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("-n", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--frames-min", type=int, default=2)
    p.add_argument("--frames-max", type=int, default=4)
    p.add_argument("--blank-prob", type=float, default=0.2)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--confusion-mass", type=float, default=0.0)
    p.add_argument("--confusion-groups", default="P,B,M;F,V;S,Z")
    p.add_argument("--max-words", type=int, default=8)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="run oracle and/or standard decoding over a benchmark")
    p.add_argument("--graph", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--mode", choices=("oracle", "standard", "both"), default="both")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("decode", help="decode one utterance with manual selection")
    p.add_argument("--graph", required=True)
    p.add_argument("--frames", required=True)
    p.add_argument("--show", type=int, default=10, help="candidates to display per point")
    _add_config_flags(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("serve", help="run the interactive session service")
    p.add_argument("--graph", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=7071, help="stream-socket protocol port")
    p.add_argument("--http-port", type=int, default=7070, help="HTTP mapping port")
    p.add_argument("--idle-timeout", type=float, default=600.0)
    p.add_argument("--static", default=None, help="directory of UI files to serve at /")
    _add_config_flags(p)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses status 2 for usage errors; remap per the CLI contract
        code = exc.code
        if code not in (0, None):
            code = USAGE_EXIT
        raise SystemExit(code)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
