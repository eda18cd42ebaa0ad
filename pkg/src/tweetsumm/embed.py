"""Tweet embedding providers.

Embeddings arrive through a binary file ("TEB1" format) produced offline
by an encoder exporter; a deterministic seeded fallback lets the whole
numeric path run without any file.
"""

from __future__ import annotations

import struct

import numpy as np

from .preprocess import TokenSeq

EMBED_DIM = 768
_MAGIC = b"TEB1"

FALLBACK_SEED = 719245021


class EmbeddingError(Exception):
    pass


class EmbeddingStore:
    """Immutable tweet-id -> vector map loaded from a TEB1 file."""

    def __init__(self, vectors: dict[int, np.ndarray], dimension: int):
        self.vectors = vectors
        self.dimension = dimension

    def get(self, tweet_id: int):
        return self.vectors.get(tweet_id)

    def __len__(self):
        return len(self.vectors)


def load_store(path) -> EmbeddingStore:
    with open(path, "rb") as fh:
        header = fh.read(4 + 4 + 8)
        if len(header) < 16 or header[:4] != _MAGIC:
            raise EmbeddingError(f"{path}: bad embedding file header")
        dim, count = struct.unpack("<IQ", header[4:])
        record_size = 8 + 4 * dim
        vectors: dict[int, np.ndarray] = {}
        for _ in range(count):
            raw = fh.read(record_size)
            if len(raw) != record_size:
                raise EmbeddingError(f"{path}: truncated embedding file")
            (tweet_id,) = struct.unpack("<Q", raw[:8])
            vec = np.frombuffer(raw[8:], dtype="<f4").astype(np.float64)
            if vec.shape[0] != dim:
                raise EmbeddingError(f"{path}: record dimension mismatch")
            vectors[tweet_id] = vec
        if fh.read(1):
            raise EmbeddingError(f"{path}: trailing bytes after {count} records")
    return EmbeddingStore(vectors, dim)


def write_store(path, records, dimension: int = EMBED_DIM) -> None:
    """Write (tweet_id, vector) pairs in the TEB1 format, input order kept."""
    records = list(records)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<IQ", dimension, len(records)))
        for tweet_id, vec in records:
            vec = np.asarray(vec, dtype="<f4")
            if vec.shape != (dimension,):
                raise EmbeddingError(f"record for id {tweet_id} has shape {vec.shape}")
            fh.write(struct.pack("<Q", int(tweet_id)))
            fh.write(vec.tobytes())


def _token_vector(token_id: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng([FALLBACK_SEED, int(token_id)])
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


class FallbackEmbedder:
    """Deterministic token-hash embedder: mean of unit pseudo-random
    per-token vectors, seeded by token id under a fixed global seed."""

    def __init__(self, dim: int = EMBED_DIM):
        self.dimension = dim
        self._cache: dict[int, np.ndarray] = {}

    def embed_seq(self, seq: TokenSeq) -> np.ndarray:
        ids = seq.non_pad_ids()
        if not ids:
            return np.zeros(self.dimension)
        acc = np.zeros(self.dimension)
        for token_id in ids:
            if token_id not in self._cache:
                self._cache[token_id] = _token_vector(token_id, self.dimension)
            acc += self._cache[token_id]
        return acc / len(ids)


class EmbeddingProvider:
    """Store lookup with fallback on miss; fallback-only when store is None."""

    def __init__(self, store: EmbeddingStore | None = None, dim: int = EMBED_DIM):
        if store is not None and store.dimension != dim:
            raise EmbeddingError(
                f"store dimension {store.dimension} != expected {dim}"
            )
        self.store = store
        self.dimension = dim
        self.fallback = FallbackEmbedder(dim)

    def embed(self, tweet_id: int, seq: TokenSeq) -> np.ndarray:
        if self.store is not None:
            hit = self.store.get(tweet_id)
            if hit is not None:
                return hit
        return self.fallback.embed_seq(seq)
