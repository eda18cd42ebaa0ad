#!/usr/bin/env python3
"""End-to-end experiment on one corpus directory.

Runs the full pipeline — oracle extraction, target construction, salience
training, incremental summarization, random baseline, evaluation with
significance testing — and leaves every artifact in --workdir.
"""

import argparse
import json
import os
import sys

from tweetsumm.cli import main as cli


def run(argv):
    print("+ tweetsumm " + " ".join(argv), file=sys.stderr)
    code = cli(argv)
    if code != 0:
        sys.exit(code)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--corpus", required=True,
                        help="directory holding vocab.txt, stream.jsonl, gold.jsonl")
    parser.add_argument("--workdir", required=True, help="where to put artifacts")
    parser.add_argument("--epochs", type=int, default=5)
    parser.add_argument("--embed-dim", type=int, default=768)
    parser.add_argument("--hidden", type=int, default=50)
    parser.add_argument("--warmup", type=int, default=50)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--runs", type=int, default=50, help="random-baseline runs")
    parser.add_argument("--cap", default="tweets:20")
    args = parser.parse_args()

    stream = os.path.join(args.corpus, "stream.jsonl")
    gold = os.path.join(args.corpus, "gold.jsonl")
    vocab = os.path.join(args.corpus, "vocab.txt")
    os.makedirs(args.workdir, exist_ok=True)
    w = lambda name: os.path.join(args.workdir, name)

    run(["validate", "--stream", stream, "--gold", gold, "--vocab", vocab])
    run(["oracle", "--stream", stream, "--gold", gold,
         "--out", w("oracle.jsonl"), "--no-remove-pc", "--seed", str(args.seed)])
    run(["targets", "--stream", stream, "--gold", gold, "--vocab", vocab,
         "--oracle", w("oracle.jsonl"), "--embed-dim", str(args.embed_dim),
         "--out", w("targets.npz"), "--seed", str(args.seed)])
    run(["train", "--targets", w("targets.npz"), "--out", w("model.tsn"),
         "--log", w("train_log.json"), "--epochs", str(args.epochs),
         "--hidden", str(args.hidden), "--warmup", str(args.warmup),
         "--seed", str(args.seed)])
    run(["summarize", "--stream", stream, "--vocab", vocab,
         "--checkpoint", w("model.tsn"), "--gold", gold,
         "--out", w("summary.jsonl"), "--lambda-salience", "0.2",
         "--cap", args.cap, "--seed", str(args.seed)])
    run(["baseline", "--stream", stream, "--gold", gold,
         "--runs", str(args.runs), "--seed", str(args.seed),
         "--out", w("baseline.json")])
    run(["evaluate", "--summary", f"model={w('summary.jsonl')}",
         "--gold", gold, "--out", w("report.json")])

    report = json.load(open(w("report.json")))
    baseline = json.load(open(w("baseline.json")))
    model_f = report["systems"]["model"]["micro"]["rouge1"]["f"]
    base_f = baseline["micro"]["rouge1"]["f"]
    print(f"\nmodel   ROUGE-1 F micro: {model_f:.4f}")
    print(f"random  ROUGE-1 F micro: {base_f:.4f}  ({args.runs} runs)")


if __name__ == "__main__":
    main()
