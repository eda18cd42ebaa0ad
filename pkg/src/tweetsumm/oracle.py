"""Greedy oracle-summary construction.

Per (event, day): repeatedly add the tweet whose inclusion maximizes the
relevance metric of the concatenated selection against the gold text
(ROUGE-2 F or SIF cosine), stopping on non-improvement or budget
exhaustion, ties broken by lower tweet id.
"""

from __future__ import annotations

import json

from .evaluation import cos_embed, rouge_n

METRICS = ("rouge2_f", "cosine")


def _metric_score(texts, gold_text, metric, sif_params):
    joined = " ".join(texts)
    if metric == "rouge2_f":
        return rouge_n(joined, gold_text, 2)[2]
    return cos_embed(joined, gold_text, sif_params)


def greedy_oracle(day_tweets, gold_text: str, metric: str, word_budget: int,
                  sif_params=None) -> list[int]:
    """Ordered tweet ids of the greedy extract for one day."""
    if metric not in METRICS:
        raise ValueError(f"unknown oracle metric {metric!r}")
    if word_budget < 0:
        raise ValueError("word budget must be >= 0")
    if not gold_text or not gold_text.strip():
        return []

    selected: list = []
    selected_words = 0
    best_score = 0.0
    remaining = sorted(day_tweets, key=lambda t: t.id)
    while remaining:
        best_cand = None
        best_cand_score = best_score
        for tweet in remaining:
            n_words = len(tweet.text.split())
            if selected_words + n_words > word_budget:
                continue
            score = _metric_score(
                [t.text for t in selected] + [tweet.text], gold_text, metric, sif_params
            )
            if score > best_cand_score:  # strict improvement; id order breaks ties
                best_cand = tweet
                best_cand_score = score
        if best_cand is None:
            break
        selected.append(best_cand)
        selected_words += len(best_cand.text.split())
        best_score = best_cand_score
        remaining = [t for t in remaining if t.id != best_cand.id]
    return [t.id for t in selected]


def write_oracle(path, rows) -> None:
    """JSON Lines: one object per (event, day, metric) with ordered ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for event_id, day_index, metric, ids in rows:
            fh.write(
                json.dumps(
                    {"event": event_id, "day": day_index, "metric": metric, "ids": list(ids)},
                    sort_keys=True,
                )
                + "\n"
            )


def read_oracle_ids(path) -> set[int]:
    ids: set[int] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                ids.update(json.loads(line)["ids"])
    return ids
