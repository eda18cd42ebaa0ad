"""Per-event running token-frequency context.

The tracker accumulates raw counts over the event stream (PAD excluded);
snapshots are normalized relative frequencies handed to the salience net.
"""

from __future__ import annotations

import struct

import numpy as np

from .preprocess import TokenSeq, Vocab

_MAGIC = b"FQT1"


class FrequencyTracker:
    """Append-only token counts for one event stream."""

    def __init__(self, vocab: Vocab, event_id: str = ""):
        self.vocab = vocab
        self.event_id = event_id
        self.counts = np.zeros(vocab.freq_dim, dtype=np.uint64)
        self.total = 0

    def update(self, seq: TokenSeq) -> None:
        """Count every non-PAD position of an encoded tweet."""
        for token_id in seq.non_pad_ids():
            self.counts[self.vocab.freq_index(token_id)] += 1
        self.total += seq.length

    def snapshot(self) -> np.ndarray:
        """Relative frequencies counts/total; all-zero when empty."""
        if self.total == 0:
            return np.zeros(self.counts.shape[0], dtype=np.float64)
        return self.counts.astype(np.float64) / self.total

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<I", self.counts.shape[0]))
            fh.write(self.counts.astype("<u8").tobytes())

    @classmethod
    def load(cls, path, vocab: Vocab, event_id: str = "") -> "FrequencyTracker":
        with open(path, "rb") as fh:
            magic = fh.read(4)
            if magic != _MAGIC:
                raise ValueError(f"bad tracker magic {magic!r}")
            (dim,) = struct.unpack("<I", fh.read(4))
            if dim != vocab.freq_dim:
                raise ValueError(
                    f"tracker dimension {dim} != vocab frequency dim {vocab.freq_dim}"
                )
            raw = fh.read(8 * dim)
            if len(raw) != 8 * dim:
                raise ValueError("truncated tracker checkpoint")
        tracker = cls(vocab, event_id)
        tracker.counts = np.frombuffer(raw, dtype="<u8").astype(np.uint64)
        tracker.total = int(tracker.counts.sum())
        return tracker
