#!/usr/bin/env python3
"""Generate a synthetic multi-event tweet corpus with planted gold texts.

Writes vocab.txt, stream.jsonl and gold.jsonl to --out.
"""

import argparse

from tweetsumm import synthetic


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--events", type=int, default=3)
    parser.add_argument("--days", type=int, default=5)
    parser.add_argument("--tweets-per-day", type=int, default=200)
    parser.add_argument("--salient-fraction", type=float, default=0.05)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    vocab_lines, tweets, gold = synthetic.make_corpus(
        n_events=args.events,
        n_days=args.days,
        tweets_per_day=args.tweets_per_day,
        salient_fraction=args.salient_fraction,
        seed=args.seed,
    )
    paths = synthetic.write_corpus(args.out, vocab_lines, tweets, gold)
    for name, path in paths.items():
        print(f"{name}: {path}")
    print(f"tweets: {len(tweets)}  vocab: {len(vocab_lines)}  gold entries: {len(gold.entries)}")


if __name__ == "__main__":
    main()
