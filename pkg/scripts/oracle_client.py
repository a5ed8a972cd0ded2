#!/usr/bin/env python3
"""Scripted oracle client for a running `wordsync serve` instance.

Opens one socket-protocol session per benchmark utterance, applies the
simulated-user policy to each candidate list, and prints the resulting
transcripts.  Demonstrates that a scripted client over the wire reproduces
what the batch evaluator computes in-process.

Usage:
  wordsync serve --graph graph.fst --port 7071 &
  python scripts/oracle_client.py --port 7071 --manifest bench/manifest.jsonl
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from wordsync.cli import load_manifest
from wordsync.ctc import FrameProbs
from wordsync.decoder import Candidate
from wordsync.oracle import oracle_step
from wordsync.service import SocketSessionClient


def drive(host, port, frames, transcript):
    client = SocketSessionClient(host, port)
    client.hello(frames=frames)
    cursor = 0
    try:
        while True:
            msg = client.recv()
            if msg is None:
                raise RuntimeError("connection closed")
            kind = msg["kind"]
            if kind == "candidates":
                typed = [
                    Candidate(c["word"], c["score"], (), c["rank"])
                    for c in msg["payload"]["candidates"]
                ]
                _, outcome, cursor = oracle_step(typed, transcript, cursor)
                if outcome.stop:
                    client.stop()
                else:
                    client.select(outcome.selected)
            elif kind == "result":
                result = msg["payload"]["transcript"]
            elif kind == "stats":
                return result
            elif kind == "error" and msg["payload"].get("fatal"):
                raise RuntimeError(f"service error: {msg['payload']}")
    finally:
        client.close()


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=7071)
    parser.add_argument("--manifest", required=True)
    args = parser.parse_args()

    for record in load_manifest(args.manifest):
        frames = FrameProbs.load(record["frames_path"])
        transcript = drive(args.host, args.port, frames, record["transcript"])
        print(json.dumps({"id": record["id"], "reference": record["transcript"], "hypothesis": transcript}))


if __name__ == "__main__":
    main()
