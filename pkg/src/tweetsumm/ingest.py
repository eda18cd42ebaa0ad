"""Reading and partitioning tweet streams and gold-standard summaries.

Stream files are JSON Lines: one object per line with fields ``id``
(unsigned int), ``event`` (str), ``timestamp`` (unix seconds, unsigned int)
and ``text`` (str).  Gold files are JSON Lines with ``event``, ``day``
(0-based increment ordinal) and ``text``.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400


class DataError(Exception):
    """Fatal problem with an input file."""


@dataclass(frozen=True)
class Tweet:
    id: int
    event_id: str
    timestamp: int
    text: str


@dataclass(frozen=True)
class TimeIncrement:
    event_id: str
    day_index: int
    start_ts: int
    end_ts: int


class GoldStandard:
    """Reference summaries keyed by (event_id, day_index); days may be absent."""

    def __init__(self, entries=None):
        self.entries: dict[tuple[str, int], str] = dict(entries or {})

    def get(self, event_id: str, day_index: int) -> str | None:
        return self.entries.get((event_id, day_index))

    def __len__(self):
        return len(self.entries)

    def __contains__(self, key):
        return key in self.entries


_REQUIRED_FIELDS = ("id", "event", "timestamp", "text")


def read_stream(path) -> list[Tweet]:
    """Parse a JSON Lines tweet file, sorted by (timestamp, id).

    Malformed lines are skipped with a warning; more than 10% skipped is
    fatal. Tweets with empty (post-trim) text count as malformed.
    """
    tweets = []
    skipped = 0
    total = 0
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read stream file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            total += 1
            try:
                rec = json.loads(line)
                if not all(k in rec for k in _REQUIRED_FIELDS):
                    missing = [k for k in _REQUIRED_FIELDS if k not in rec]
                    raise ValueError(f"missing fields {missing}")
                text = str(rec["text"])
                if not text.strip():
                    raise ValueError("empty text")
                tweets.append(
                    Tweet(
                        id=int(rec["id"]),
                        event_id=str(rec["event"]),
                        timestamp=int(rec["timestamp"]),
                        text=text,
                    )
                )
            except (ValueError, TypeError, json.JSONDecodeError) as exc:
                skipped += 1
                log.warning("%s:%d skipped: %s", path, lineno, exc)
    if total and skipped > 0.1 * total:
        raise DataError(
            f"{path}: {skipped}/{total} lines malformed (>10%)"
        )
    tweets.sort(key=lambda t: (t.timestamp, t.id))
    return tweets


def partition_increments(tweets) -> list[tuple[TimeIncrement, list[Tweet]]]:
    """Split one event's tweets into contiguous UTC calendar-day batches.

    Empty days between the first and last tweet are emitted as empty
    batches so day indices stay aligned with wall-clock days.
    """
    tweets = sorted(tweets, key=lambda t: (t.timestamp, t.id))
    if not tweets:
        return []
    event_ids = {t.event_id for t in tweets}
    if len(event_ids) > 1:
        raise DataError(f"mixed event ids in one stream: {sorted(event_ids)}")
    event_id = tweets[0].event_id

    first_day = tweets[0].timestamp // SECONDS_PER_DAY
    last_day = tweets[-1].timestamp // SECONDS_PER_DAY
    batches: list[list[Tweet]] = [[] for _ in range(last_day - first_day + 1)]
    for t in tweets:
        batches[t.timestamp // SECONDS_PER_DAY - first_day].append(t)

    out = []
    for i, batch in enumerate(batches):
        day = first_day + i
        inc = TimeIncrement(
            event_id=event_id,
            day_index=i,
            start_ts=day * SECONDS_PER_DAY,
            end_ts=(day + 1) * SECONDS_PER_DAY,
        )
        out.append((inc, batch))
    return out


def read_gold(path) -> GoldStandard:
    """Parse a gold-standard JSON Lines file.

    Duplicate (event, day) keys: last wins with a warning. Entries with
    empty text are skipped with a warning.
    """
    entries: dict[tuple[str, int], str] = {}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read gold file {path}: {exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                key = (str(rec["event"]), int(rec["day"]))
                text = str(rec["text"])
            except (KeyError, ValueError, TypeError, json.JSONDecodeError) as exc:
                log.warning("%s:%d skipped: %s", path, lineno, exc)
                continue
            if not text.strip():
                log.warning("%s:%d empty gold text for %s, skipped", path, lineno, key)
                continue
            if key in entries:
                log.warning("%s:%d duplicate gold entry for %s, last wins", path, lineno, key)
            entries[key] = text
    return GoldStandard(entries)
