"""Evaluation harness: ROUGE-1/2, SIF-cosine, random baselines, Wilcoxon.

ROUGE runs on the normalized token stream (same normalize() as
preprocessing, whitespace words, no stemming or stopword removal) so
scores are reproducible. Micro aggregation pools n-gram counts over all
(event, day) pairs; macro averages per-day F within each event and then
across events.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .preprocess import normalize


# ---------------------------------------------------------------------------
# ROUGE

def _ngrams(words, n):
    return Counter(tuple(words[i : i + n]) for i in range(len(words) - n + 1))


def rouge_counts(candidate: str, reference: str, n: int):
    """(overlap, candidate n-gram total, reference n-gram total)."""
    cand = _ngrams(normalize(candidate).split(), n)
    ref = _ngrams(normalize(reference).split(), n)
    overlap = sum((cand & ref).values())
    return overlap, sum(cand.values()), sum(ref.values())


def _prf(overlap, n_cand, n_ref):
    p = overlap / n_cand if n_cand else 0.0
    r = overlap / n_ref if n_ref else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def rouge_n(candidate: str, reference: str, n: int):
    """ROUGE-N precision, recall, F on multiset n-gram overlap."""
    return _prf(*rouge_counts(candidate, reference, n))


# ---------------------------------------------------------------------------
# SIF sentence embeddings

@dataclass
class SIFParams:
    word_vectors: dict
    word_probs: dict
    a: float = 1e-3
    remove_pc: bool = True
    dim: int = field(init=False)

    def __post_init__(self):
        if not self.word_vectors:
            raise ValueError("empty word-vector table")
        self.dim = len(next(iter(self.word_vectors.values())))


def sif_fallback_params(texts, dim: int = 50, seed: int = 20113, a: float = 1e-3,
                        remove_pc: bool = True) -> SIFParams:
    """Deterministic SIF parameters from a corpus: hashed unit word
    vectors and add-one-smoothed word probabilities."""
    counts = Counter()
    for text in texts:
        counts.update(normalize(text).split())
    total = sum(counts.values()) + len(counts)
    vectors = {}
    probs = {}
    for word in sorted(counts):
        word_seed = int.from_bytes(word.encode("utf-8")[:8].ljust(8, b"\0"), "little")
        rng = np.random.default_rng([seed, word_seed, len(word)])
        v = rng.standard_normal(dim)
        vectors[word] = v / np.linalg.norm(v)
        probs[word] = (counts[word] + 1) / total
    return SIFParams(word_vectors=vectors, word_probs=probs, a=a, remove_pc=remove_pc)


def sif_embed(text: str, params: SIFParams) -> np.ndarray:
    """Probability-weighted word-vector average (before any PC removal).

    Out-of-vocabulary words are skipped; an all-OOV text maps to the zero
    vector.
    """
    words = [w for w in normalize(text).split() if w in params.word_vectors]
    if not words:
        return np.zeros(params.dim)
    acc = np.zeros(params.dim)
    for w in words:
        p = params.word_probs.get(w, 0.0)
        acc += params.a / (params.a + p) * np.asarray(params.word_vectors[w])
    return acc / len(words)


def first_principal_component(vectors) -> np.ndarray | None:
    """Leading right-singular vector of the stacked (nonzero) vectors."""
    mat = np.stack([np.asarray(v) for v in vectors if np.linalg.norm(v) > 0])
    if mat.shape[0] == 0:
        return None
    _, s, vt = np.linalg.svd(mat, full_matrices=False)
    if s[0] <= 0:
        return None
    return vt[0]


def _remove_projection(v, pc):
    return v - np.dot(v, pc) * pc


def _cosine(u, v, pc=None) -> float:
    """Cosine of the two vectors, after optional first-PC removal.

    If PC removal annihilates a nonzero vector (rank-deficient batch) the
    raw vectors are used instead, so identical texts stay at cosine 1.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if pc is not None:
        ur = _remove_projection(u, pc)
        vr = _remove_projection(v, pc)
        tiny = 1e-12
        if (np.linalg.norm(ur) > tiny or np.linalg.norm(u) <= tiny) and (
            np.linalg.norm(vr) > tiny or np.linalg.norm(v) <= tiny
        ):
            u, v = ur, vr
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def cos_embed(candidate: str, reference: str, params: SIFParams, pc=None) -> float:
    """SIF-cosine between two texts.

    ``pc`` is the first principal component estimated over the batch of
    texts being compared (pass None to skip removal; a two-text batch is
    degenerate, so callers comparing many pairs should estimate one PC
    over the whole evaluation batch).
    """
    return _cosine(sif_embed(candidate, params), sif_embed(reference, params), pc)


def load_word_vectors(path) -> dict:
    """Text format: first line "count dim", then "word v1 ... vdim"."""
    vectors = {}
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        count, dim = int(header[0]), int(header[1])
        for line in fh:
            parts = line.rstrip("\n").split(" ")
            if len(parts) != dim + 1:
                raise ValueError(f"{path}: bad vector line for {parts[0]!r}")
            vectors[parts[0]] = np.array([float(v) for v in parts[1:]])
    if len(vectors) != count:
        raise ValueError(f"{path}: header count {count} != {len(vectors)} vectors")
    return vectors


def load_word_probs(path) -> dict:
    """Text format: "word probability" per line."""
    probs = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                word, p = line.split()
                probs[word] = float(p)
    return probs


# ---------------------------------------------------------------------------
# Aggregation

@dataclass
class DayScore:
    event_id: str
    day_index: int
    rouge1: tuple  # (P, R, F)
    rouge2: tuple
    counts1: tuple  # (overlap, cand, ref)
    counts2: tuple
    cos: float


def score_day(event_id, day_index, candidate_text, reference_text, sif_params=None, pc=None):
    c1 = rouge_counts(candidate_text, reference_text, 1)
    c2 = rouge_counts(candidate_text, reference_text, 2)
    cos = (
        cos_embed(candidate_text, reference_text, sif_params, pc)
        if sif_params is not None
        else 0.0
    )
    return DayScore(event_id, day_index, _prf(*c1), _prf(*c2), c1, c2, cos)


def aggregate(day_scores):
    """(micro, macro) aggregates over DayScores.

    Micro pools n-gram counts over all days (cosine: unweighted mean over
    days); macro means per-day F within each event, then across events.
    """
    if not day_scores:
        raise ValueError("no day scores to aggregate")
    micro = {}
    for name, idx in (("rouge1", "counts1"), ("rouge2", "counts2")):
        pooled = [0, 0, 0]
        for d in day_scores:
            c = getattr(d, idx)
            pooled = [a + b for a, b in zip(pooled, c)]
        p, r, f = _prf(*pooled)
        micro[name] = {"p": p, "r": r, "f": f}
    micro["cos"] = float(np.mean([d.cos for d in day_scores]))

    events: dict[str, list[DayScore]] = {}
    for d in day_scores:
        events.setdefault(d.event_id, []).append(d)
    macro = {}
    for name in ("rouge1", "rouge2"):
        per_event = [
            float(np.mean([getattr(d, name)[2] for d in ds])) for ds in events.values()
        ]
        macro[name] = {"f": float(np.mean(per_event))}
    macro["cos"] = float(
        np.mean([float(np.mean([d.cos for d in ds])) for ds in events.values()])
    )
    return micro, macro


# ---------------------------------------------------------------------------
# Random baseline

def random_baseline(day_pools, word_budgets, gold, runs: int = 50, seed: int = 0,
                    sif_params=None):
    """Average scores of randomly constructed summaries.

    ``day_pools`` maps (event_id, day_index) -> candidate tweet list;
    ``word_budgets`` maps the same keys to word budgets.  Each run samples
    uniformly without replacement per day until the next tweet would
    exceed the budget.  Returns (mean micro, mean macro, per-run list).
    """
    run_aggs = []
    for run in range(runs):
        rng = np.random.default_rng([seed, run])
        day_scores = []
        for key in sorted(day_pools):
            event_id, day_index = key
            gold_text = gold.get(event_id, day_index)
            if gold_text is None:
                continue
            pool = day_pools[key]
            budget = word_budgets[key]
            order = rng.permutation(len(pool))
            chosen = []
            words = 0
            for i in order:
                w = len(pool[i].text.split())
                if words + w > budget:
                    break
                chosen.append(pool[i].text)
                words += w
            day_scores.append(
                score_day(event_id, day_index, " ".join(chosen), gold_text, sif_params)
            )
        if day_scores:
            run_aggs.append(aggregate(day_scores))

    if not run_aggs:
        raise ValueError("no evaluable days in baseline")

    def mean_nested(key_path):
        vals = []
        for micro, macro in run_aggs:
            node = {"micro": micro, "macro": macro}
            for k in key_path:
                node = node[k]
            vals.append(node)
        return float(np.mean(vals))

    micro = {
        "rouge1": {k: mean_nested(("micro", "rouge1", k)) for k in ("p", "r", "f")},
        "rouge2": {k: mean_nested(("micro", "rouge2", k)) for k in ("p", "r", "f")},
        "cos": mean_nested(("micro", "cos")),
    }
    macro = {
        "rouge1": {"f": mean_nested(("macro", "rouge1", "f"))},
        "rouge2": {"f": mean_nested(("macro", "rouge2", "f"))},
        "cos": mean_nested(("macro", "cos")),
    }
    return micro, macro, run_aggs


# ---------------------------------------------------------------------------
# Wilcoxon signed-rank test

def _signed_ranks(x, y):
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    diffs = [d for d in diffs if d != 0.0]
    if not diffs:
        raise ValueError("degenerate sample: all differences zero")
    absd = sorted((abs(d), i) for i, d in enumerate(diffs))
    ranks = [0.0] * len(diffs)
    i = 0
    while i < len(absd):
        j = i
        while j < len(absd) and absd[j][0] == absd[i][0]:
            j += 1
        avg_rank = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[absd[k][1]] = avg_rank
        i = j
    return diffs, ranks


def wilcoxon_signed_rank(x, y):
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped; ties get average ranks. W = min(W+, W-).
    Exact p (enumeration over sign assignments, computed by rank-sum
    counting) for effective n <= 25; normal approximation with tie
    correction above.
    """
    if len(x) != len(y) or len(x) == 0:
        raise ValueError("paired samples of equal positive length required")
    diffs, ranks = _signed_ranks(x, y)
    n = len(diffs)
    w_plus = sum(r for d, r in zip(diffs, ranks) if d > 0)
    w_minus = sum(r for d, r in zip(diffs, ranks) if d < 0)
    w = min(w_plus, w_minus)

    if n <= 25:
        # Count sign assignments by rank-sum DP over doubled (integer) ranks.
        doubled = [int(round(2 * r)) for r in ranks]
        total = sum(doubled)
        counts = np.zeros(total + 1, dtype=object)
        counts[0] = 1
        for r in doubled:
            counts[r:] = counts[r:] + counts[:-r]
        w2 = int(round(2 * w))
        at_most = int(sum(counts[: w2 + 1]))
        p = min(1.0, 2.0 * at_most / (1 << n))
    else:
        mu = n * (n + 1) / 4.0
        tie_term = sum(
            (c**3 - c) for c in Counter([round(2 * r) for r in ranks]).values()
        ) / 48.0
        sigma2 = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term
        z = (w - mu) / math.sqrt(sigma2)
        p = min(1.0, math.erfc(abs(z) / math.sqrt(2)))
    return w, p
