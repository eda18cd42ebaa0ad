"""Synthetic desk-scale corpora for experiments and end-to-end tests.

Each event gets a topic word pool; a configurable fraction of tweets are
near-copies of the planted daily gold text, the rest are noise drawn from
a shared background pool.  Everything is deterministic per seed.
"""

from __future__ import annotations

import json

import numpy as np

from .ingest import GoldStandard, Tweet
from .preprocess import PAD_TOKEN, SPECIAL_STREAM_TOKENS, UNK_TOKEN

_CONSONANTS = "bcdfghklmnprstvz"
_VOWELS = "aeiou"


def _word(rng) -> str:
    n = rng.integers(2, 4)
    return "".join(
        _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
        for _ in range(n)
    )


def make_corpus(n_events: int = 3, n_days: int = 5, tweets_per_day: int = 100,
                salient_fraction: float = 0.05, seed: int = 0):
    """Returns (vocab_lines, tweets, gold)."""
    rng = np.random.default_rng(seed)
    noise_pool = sorted({_word(rng) for _ in range(120)})
    topic_pools = [
        sorted({_word(rng) for _ in range(40)}) for _ in range(n_events)
    ]

    all_words = sorted(set(noise_pool).union(*topic_pools))
    vocab_lines = [PAD_TOKEN, UNK_TOKEN] + all_words + list(SPECIAL_STREAM_TOKENS)

    tweets = []
    gold_entries = {}
    tweet_id = 1
    for e in range(n_events):
        event_id = f"event{e}"
        topic = topic_pools[e]
        for day in range(n_days):
            gold_words = [topic[int(i)] for i in rng.choice(len(topic), size=12, replace=False)]
            gold_entries[(event_id, day)] = " ".join(gold_words)
            for k in range(tweets_per_day):
                ts = day * 86400 + int(rng.integers(0, 86400))
                if rng.random() < salient_fraction:
                    words = list(gold_words)
                    # near-copy: drop one word, shuffle lightly
                    drop = int(rng.integers(len(words)))
                    words = words[:drop] + words[drop + 1 :]
                    if rng.random() < 0.5:
                        words = words[::-1]
                else:
                    words = [
                        noise_pool[int(i)]
                        for i in rng.integers(0, len(noise_pool), size=int(rng.integers(6, 14)))
                    ]
                tweets.append(Tweet(id=tweet_id, event_id=event_id, timestamp=ts, text=" ".join(words)))
                tweet_id += 1
    tweets.sort(key=lambda t: (t.event_id, t.timestamp, t.id))
    return vocab_lines, tweets, GoldStandard(gold_entries)


def write_corpus(outdir, vocab_lines, tweets, gold):
    """Write vocab.txt, stream.jsonl and gold.jsonl under ``outdir``."""
    import os

    os.makedirs(outdir, exist_ok=True)
    paths = {
        "vocab": os.path.join(outdir, "vocab.txt"),
        "stream": os.path.join(outdir, "stream.jsonl"),
        "gold": os.path.join(outdir, "gold.jsonl"),
    }
    with open(paths["vocab"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(vocab_lines) + "\n")
    with open(paths["stream"], "w", encoding="utf-8") as fh:
        for t in tweets:
            fh.write(
                json.dumps(
                    {"id": t.id, "event": t.event_id, "timestamp": t.timestamp, "text": t.text},
                    sort_keys=True,
                )
                + "\n"
            )
    with open(paths["gold"], "w", encoding="utf-8") as fh:
        for (event_id, day), text in sorted(gold.entries.items()):
            fh.write(json.dumps({"event": event_id, "day": day, "text": text}, sort_keys=True) + "\n")
    return paths
