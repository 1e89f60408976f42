#!/usr/bin/env python3
"""End-to-end offline demo: synthetic corpus -> ingest -> build-pairs ->
generate -> evaluate, all against mock endpoints (zero network).

Usage: python scripts/run_offline_demo.py [--workdir DIR] [--n 25]
"""

import argparse
import json
import random
import sys
from pathlib import Path

from pgce.cli import main as pgce_main

DAILY_STEMS = [
    "any advice for a better morning routine and sleep habit",
    "recommend a movie or game for the weekend party",
    "tips to improve my study habit and career goal",
    "what hobby or travel plan suits a short vacation",
]
OTHER_STEMS = [
    "explain the statute and court ruling on contract liability",
    "how to balance an investment portfolio with mortgage payments",
    "summarize the new policy and legislation before the election",
]


def build_corpus(path: Path, n_daily: int, n_other: int, seed: int) -> None:
    rng = random.Random(seed)
    rows = []
    for i in range(n_daily):
        filler = " ".join(f"d{i}w{j}" for j in range(rng.randint(6, 10)))
        rows.append({"id": f"daily{i:03d}", "text": f"{DAILY_STEMS[i % 4]} {filler}"})
    for i in range(n_other):
        filler = " ".join(f"o{i}w{j}" for j in range(rng.randint(6, 10)))
        rows.append({"id": f"other{i:03d}", "text": f"{OTHER_STEMS[i % 3]} {filler}"})
    # plant one exact duplicate so the dedup stage has work to do
    rows.append({"id": "dup000", "text": rows[0]["text"]})
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def write_mocks(workdir: Path) -> tuple[Path, Path]:
    judge_reply = json.dumps(
        {
            "relevance": 0.85,
            "professionalism": 0.8,
            "language_quality": 0.85,
            "safety_compliance": 0.9,
        }
    )
    judge = workdir / "judge.json"
    judge.write_text(json.dumps({"default_chat": judge_reply}), encoding="utf-8")
    scorer = workdir / "scorer.json"
    scorer.write_text(json.dumps({"default_score": 0.04}), encoding="utf-8")
    return judge, scorer


def run(args) -> int:
    workdir = Path(args.workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    raw = workdir / "raw.jsonl"
    build_corpus(raw, args.daily, args.other, args.seed)
    judge, scorer = write_mocks(workdir)

    stages = [
        ["ingest", str(raw), "--out", str(workdir / "ingest"), "--offline"],
        [
            "build-pairs", str(workdir / "ingest" / "corpus.jsonl"),
            "--out", str(workdir / "pairs"), "--offline",
            "--judges", f"mock:{judge},mock:{judge}",
        ],
        [
            "generate", str(workdir / "ingest" / "corpus.jsonl"),
            "--pairs", str(workdir / "pairs" / "pairs.jsonl"),
            "--endpoint", "mock:echo", "--scorer", f"mock:{scorer}",
            "--n", str(args.n), "--out", str(workdir / "gen"), "--offline",
        ],
        [
            "evaluate", str(workdir / "gen" / "records.jsonl"),
            "--mode", "toxicity", "--out", str(workdir / "eval"), "--offline",
        ],
        [
            "evaluate", str(workdir / "ingest" / "corpus.jsonl"),
            "--mode", "readability", "--out", str(workdir / "readability"), "--offline",
        ],
    ]
    for argv in stages:
        print(f"\n$ pgce {' '.join(argv)}")
        code = pgce_main(argv)
        if code != 0:
            print(f"stage failed with exit code {code}", file=sys.stderr)
            return code

    manifest = json.loads((workdir / "eval" / "manifest.json").read_text())
    print(f"\nall stages complete; eval run {manifest['run_id']}")
    print(f"outputs under {workdir}")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--workdir", default="demo_run")
    parser.add_argument("--daily", type=int, default=40)
    parser.add_argument("--other", type=int, default=10)
    parser.add_argument("--n", type=int, default=25)
    parser.add_argument("--seed", type=int, default=11)
    raise SystemExit(run(parser.parse_args()))
