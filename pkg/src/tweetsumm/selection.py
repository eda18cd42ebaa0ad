"""Two-phase incremental tweet selection.

Per day: candidates above the salience threshold are scanned in
salience-descending order and appended iff their embedding cosine to
every tweet already in the summary stays below an adaptive similarity
threshold that tightens as the summary grows.  The summary is strictly
append-only: past increments are never re-evaluated.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .ingest import partition_increments
from .preprocess import encode
from .salience import forward

TWEET_CAP_DEFAULT = 20


@dataclass(frozen=True)
class SummaryEntry:
    tweet_id: int
    text: str
    salience: float
    day_index: int


@dataclass
class IncrementalSummary:
    event_id: str = ""
    entries: list[SummaryEntry] = field(default_factory=list)
    word_length: int = 0

    def append(self, entry: SummaryEntry) -> None:
        if self.entries and entry.day_index < self.entries[-1].day_index:
            raise ValueError("day indices must be non-decreasing")
        self.entries.append(entry)
        self.word_length += len(entry.text.split())

    def text(self) -> str:
        return " ".join(e.text for e in self.entries)


@dataclass
class SelectionConfig:
    lambda_salience: float = 0.2
    lambda_sim_base: float = 0.3
    cap_mode: str = "tweets"  # "tweets" or "words"
    tweet_cap: int = TWEET_CAP_DEFAULT
    word_budget_per_day: int | None = None  # words mode; None = gold length


def adaptive_lambda(summary_word_length: int, base: float = 0.3) -> float:
    """Similarity threshold: constant below 50 words, then shrinking as
    base * log(50)/log(length)."""
    if summary_word_length < 50:
        return base
    return base * math.log(50.0) / math.log(summary_word_length)


def similarity(vec_a, vec_b) -> float:
    """Cosine of two embedding vectors; zero vector on either side -> 0."""
    na = np.linalg.norm(vec_a)
    nb = np.linalg.norm(vec_b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(vec_a, vec_b) / (na * nb))


def step_increment(summary: IncrementalSummary, scored_batch, day_index: int,
                   config: SelectionConfig, embeddings: dict,
                   budget_limit: int | None = None) -> list[SummaryEntry]:
    """Extend the summary with one day's scored candidates.

    ``scored_batch`` is a list of (Tweet, salience) with scores already
    clamped to [0, 1]; ``embeddings`` maps tweet id -> embedding vector
    (candidates and all current summary entries). ``budget_limit`` is the
    cumulative word cap in words mode.  Returns the appended entries.
    """
    survivors = [(t, s) for t, s in scored_batch if s > config.lambda_salience]
    survivors.sort(key=lambda ts: (-ts[1], ts[0].id))

    appended = []
    for tweet, score in survivors:
        if config.cap_mode == "tweets" and len(appended) >= config.tweet_cap:
            break
        if config.cap_mode == "words":
            n_words = len(tweet.text.split())
            if budget_limit is not None and summary.word_length + n_words > budget_limit:
                break
        threshold = adaptive_lambda(summary.word_length, config.lambda_sim_base)
        cand_vec = embeddings[tweet.id]
        redundant = any(
            similarity(cand_vec, embeddings[e.tweet_id]) >= threshold
            for e in summary.entries
        )
        if redundant:
            continue
        entry = SummaryEntry(tweet.id, tweet.text, score, day_index)
        summary.append(entry)
        appended.append(entry)
    return appended


def summarize_event(stream, net, tracker, config: SelectionConfig, provider,
                    vocab, gold=None, summary: IncrementalSummary | None = None,
                    cumulative_budget: int = 0, day_origin: int | None = None):
    """Run the daily incremental loop over one event stream.

    Each tweet is scored in eval mode against its strictly causal
    frequency snapshot (context excludes the candidate); after scoring,
    the day's batch goes through salience and redundancy filtering.
    Resuming from a saved (summary, tracker, cumulative_budget) state is
    exact: the per-day deltas are identical to a one-pass run.
    ``day_origin`` (epoch day of the event's first increment) keeps day
    indices absolute across resumed runs; defaults to the stream's start.

    Returns (summary, per-day deltas, cumulative_budget).
    """
    if config.cap_mode == "words" and config.word_budget_per_day is None and gold is None:
        raise ValueError("words cap mode needs gold lengths or an explicit budget")

    increments = partition_increments(stream)
    if day_origin is None:
        day_origin = increments[0][0].start_ts // 86400 if increments else 0
    if summary is None:
        event_id = increments[0][0].event_id if increments else ""
        summary = IncrementalSummary(event_id=event_id)

    embeddings: dict[int, np.ndarray] = {}
    for entry in summary.entries:
        # resumed state: re-derive embeddings of prior members
        embeddings[entry.tweet_id] = provider.embed(
            entry.tweet_id, encode(entry.text, vocab)
        )

    deltas = []
    for inc, batch in increments:
        day_index = inc.start_ts // 86400 - day_origin
        scored = []
        for tweet in batch:
            seq = encode(tweet.text, vocab)
            freq = tracker.snapshot()
            emb = provider.embed(tweet.id, seq)
            embeddings[tweet.id] = emb
            score = forward(net, freq, emb, train_mode=False)
            scored.append((tweet, min(1.0, max(0.0, score))))
            tracker.update(seq)

        budget_limit = None
        if config.cap_mode == "words":
            if config.word_budget_per_day is not None:
                day_budget = config.word_budget_per_day
            else:
                gold_text = gold.get(inc.event_id, day_index)
                day_budget = len(gold_text.split()) if gold_text else 0
            cumulative_budget += day_budget
            budget_limit = cumulative_budget

        appended = step_increment(
            summary, scored, day_index, config, embeddings, budget_limit
        )
        deltas.append((inc, appended))
    return summary, deltas, cumulative_budget


def write_summary(path, summary: IncrementalSummary, event_id: str, manifest: dict) -> None:
    """JSON Lines output: manifest header line, then one entry per tweet."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"manifest": manifest}, sort_keys=True) + "\n")
        for e in summary.entries:
            fh.write(
                json.dumps(
                    {
                        "event": event_id,
                        "day": e.day_index,
                        "id": e.tweet_id,
                        "salience": e.salience,
                        "text": e.text,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
