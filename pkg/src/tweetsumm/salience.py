"""Feedforward salience regressor.

Two-branch net: the token-frequency context goes through a dense+ReLU
layer, its 50 hidden units are concatenated with the 768-dim tweet
embedding, a second dense+ReLU layer feeds a linear scalar head.
Trained from scratch: analytic backprop, Adam, Noam-style decreasing
learning rate, MSE objective, inverted dropout 0.5 on both hidden layers.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)

_MAGIC = b"TSN1"

PARAM_ORDER = ("W1", "b1", "W2", "b2", "W3", "b3")


class NumericError(Exception):
    """Non-finite value encountered in the numeric path."""


@dataclass
class NetConfig:
    freq_dim: int = 30525
    emb_dim: int = 768
    hidden_freq: int = 50
    hidden_joint: int = 50
    dropout_p: float = 0.5


class SalienceNet:
    """Parameter container; all state lives in the ``params`` dict."""

    def __init__(self, config: NetConfig, seed: int = 0):
        self.config = config
        rng = np.random.default_rng(seed)
        c = config
        self.params = {
            "W1": _glorot(rng, c.freq_dim, c.hidden_freq),
            "b1": np.zeros(c.hidden_freq),
            "W2": _glorot(rng, c.emb_dim + c.hidden_freq, c.hidden_joint),
            "b2": np.zeros(c.hidden_joint),
            "W3": _glorot(rng, c.hidden_joint, 1),
            "b3": np.zeros(1),
        }

    def copy_params(self) -> dict:
        return {k: v.copy() for k, v in self.params.items()}

    def set_params(self, params: dict) -> None:
        self.params = {k: v.copy() for k, v in params.items()}


def _glorot(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _forward_batch(net: SalienceNet, freq, emb, train_mode: bool, rng_seed: int):
    """Batch forward pass; returns scores and the cache backprop needs.

    Dropout masks are drawn from a generator seeded by ``rng_seed`` so that
    forward and grad see identical masks for the same seed.
    """
    p = net.params
    keep = 1.0 - net.config.dropout_p
    rng = np.random.default_rng(rng_seed) if train_mode else None

    h1_pre = freq @ p["W1"] + p["b1"]
    h1 = np.maximum(h1_pre, 0.0)
    if train_mode and keep < 1.0:
        mask1 = (rng.random(h1.shape) < keep) / keep
        h1d = h1 * mask1
    else:
        mask1 = None
        h1d = h1

    x = np.concatenate([emb, h1d], axis=1)
    h2_pre = x @ p["W2"] + p["b2"]
    h2 = np.maximum(h2_pre, 0.0)
    if train_mode and keep < 1.0:
        mask2 = (rng.random(h2.shape) < keep) / keep
        h2d = h2 * mask2
    else:
        mask2 = None
        h2d = h2

    scores = (h2d @ p["W3"] + p["b3"])[:, 0]
    if not np.all(np.isfinite(scores)):
        raise NumericError(
            f"non-finite score in forward pass (first bad index "
            f"{int(np.argmax(~np.isfinite(scores)))})"
        )
    cache = (freq, emb, h1_pre, mask1, x, h2_pre, mask2, h2d)
    return scores, cache


def forward(net: SalienceNet, freq, emb, train_mode: bool = False, rng_seed: int = 0) -> float:
    """Score a single (frequency, embedding) pair."""
    freq = np.asarray(freq, dtype=np.float64).reshape(1, -1)
    emb = np.asarray(emb, dtype=np.float64).reshape(1, -1)
    scores, _ = _forward_batch(net, freq, emb, train_mode, rng_seed)
    return float(scores[0])


def forward_many(net: SalienceNet, freq, emb) -> np.ndarray:
    """Eval-mode scores for a batch."""
    scores, _ = _forward_batch(net, np.asarray(freq), np.asarray(emb), False, 0)
    return scores


def loss(score: float, target: float) -> float:
    return (score - target) ** 2


def grad(net: SalienceNet, freq, emb, targets, train_mode: bool = False, rng_seed: int = 0):
    """Gradients of mean squared error over the batch, per parameter.

    Returns (gradients, batch mean loss).
    """
    freq = np.asarray(freq, dtype=np.float64)
    emb = np.asarray(emb, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if freq.shape[0] == 0:
        raise ValueError("empty batch")
    n = freq.shape[0]
    p = net.params
    scores, cache = _forward_batch(net, freq, emb, train_mode, rng_seed)
    freq_, emb_, h1_pre, mask1, x, h2_pre, mask2, h2d = cache

    residual = scores - targets
    batch_loss = float(np.mean(residual**2))
    ds = (2.0 * residual / n)[:, None]

    grads = {}
    grads["W3"] = h2d.T @ ds
    grads["b3"] = ds.sum(axis=0)
    dh2d = ds @ p["W3"].T
    if mask2 is not None:
        dh2d = dh2d * mask2
    dh2_pre = dh2d * (h2_pre > 0)
    grads["W2"] = x.T @ dh2_pre
    grads["b2"] = dh2_pre.sum(axis=0)
    dx = dh2_pre @ p["W2"].T
    dh1d = dx[:, emb_.shape[1]:]
    if mask1 is not None:
        dh1d = dh1d * mask1
    dh1_pre = dh1d * (h1_pre > 0)
    grads["W1"] = freq_.T @ dh1_pre
    grads["b1"] = dh1_pre.sum(axis=0)

    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient in {name}")
    return grads, batch_loss


class AdamState:
    def __init__(self, params: dict, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}


def adam_step(params: dict, grads: dict, state: AdamState, lr: float) -> None:
    """Bias-corrected Adam update, in place."""
    state.t += 1
    t = state.t
    for k in params:
        g = grads[k].reshape(params[k].shape)
        state.m[k] = state.beta1 * state.m[k] + (1 - state.beta1) * g
        state.v[k] = state.beta2 * state.v[k] + (1 - state.beta2) * g**2
        m_hat = state.m[k] / (1 - state.beta1**t)
        v_hat = state.v[k] / (1 - state.beta2**t)
        params[k] -= lr * m_hat / (np.sqrt(v_hat) + state.eps)


def noam_lr(step: int, d_model: int = 818, warmup: int = 4000) -> float:
    """Decreasing learning rate with linear warmup, transformer style."""
    if step < 1:
        raise ValueError("step must be >= 1")
    return d_model ** (-0.5) * min(step ** (-0.5), step * warmup ** (-1.5))


@dataclass
class TrainingExample:
    freq: np.ndarray
    emb: np.ndarray
    target: float
    tweet_id: int | None = None
    event_id: str = ""


def build_targets(stream, gold, oracle_ids, vocab, provider, sif_params, tracker=None):
    """Walk one event stream and materialize training examples.

    For each tweet: causal frequency snapshot (context excludes the
    candidate itself), provider embedding, and a salience target =
    max(0, SIF-cosine to the day's gold text). Oracle members get target
    1.0; tweets on gold-less days get target 0.
    """
    from .context import FrequencyTracker
    from .evaluation import first_principal_component, sif_embed, _cosine
    from .ingest import partition_increments
    from .preprocess import encode

    oracle_ids = set(oracle_ids or ())
    examples = []
    increments = partition_increments(stream)
    if tracker is None and increments:
        tracker = FrequencyTracker(vocab, increments[0][0].event_id)
    for inc, batch in increments:
        gold_text = gold.get(inc.event_id, inc.day_index) if gold else None
        gold_vec = None
        pc = None
        if gold_text is not None:
            texts = [t.text for t in batch] + [gold_text]
            if sif_params.remove_pc:
                vecs = [sif_embed(txt, sif_params) for txt in texts]
                pc = first_principal_component(vecs)
            gold_vec = sif_embed(gold_text, sif_params)
        for tweet in batch:
            seq = encode(tweet.text, vocab)
            freq = tracker.snapshot()
            emb = provider.embed(tweet.id, seq)
            if tweet.id in oracle_ids:
                target = 1.0
            elif gold_text is None:
                target = 0.0
            else:
                target = max(0.0, _cosine(sif_embed(tweet.text, sif_params), gold_vec, pc))
            examples.append(
                TrainingExample(
                    freq=freq,
                    emb=emb,
                    target=target,
                    tweet_id=tweet.id,
                    event_id=tweet.event_id,
                )
            )
            tracker.update(seq)
    return examples


@dataclass
class TrainConfig:
    epochs: int = 5
    batch_size: int = 128
    seed: int = 0
    val_fraction: float = 0.1
    d_model: int = 818
    warmup: int = 4000
    lr_scale: float = 1.0
    net: NetConfig = field(default_factory=NetConfig)


def _stack(examples):
    freq = np.stack([ex.freq for ex in examples])
    emb = np.stack([ex.emb for ex in examples])
    targets = np.array([ex.target for ex in examples])
    return freq, emb, targets


def train(dataset, config: TrainConfig):
    """Train a net on 90/10 train/validation split, Adam + Noam schedule.

    Returns (net with the lowest-validation-MSE parameters, history), where
    history is a list of per-epoch dicts with train/val loss.
    """
    if not dataset:
        raise ValueError("empty dataset")
    if len(dataset) < config.batch_size:
        log.warning(
            "dataset (%d) smaller than batch size (%d); training on one batch",
            len(dataset), config.batch_size,
        )

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(len(dataset))
    n_val = int(round(config.val_fraction * len(dataset)))
    if n_val == 0 and len(dataset) > 1:
        n_val = 1
    val_idx = order[:n_val]
    train_idx = order[n_val:]
    if len(train_idx) == 0:
        train_idx, val_idx = val_idx, train_idx

    train_set = [dataset[i] for i in train_idx]
    val_set = [dataset[i] for i in val_idx]
    tr_freq, tr_emb, tr_targets = _stack(train_set)
    if val_set:
        va_freq, va_emb, va_targets = _stack(val_set)

    net = SalienceNet(config.net, seed=config.seed)
    state = AdamState(net.params)
    best = net.copy_params()
    best_val = np.inf
    history = []
    step = 0

    for epoch in range(config.epochs):
        epoch_order = rng.permutation(len(train_set))
        for start in range(0, len(train_set), config.batch_size):
            idx = epoch_order[start : start + config.batch_size]
            step += 1
            grads, _ = grad(
                net,
                tr_freq[idx],
                tr_emb[idx],
                tr_targets[idx],
                train_mode=net.config.dropout_p > 0,
                rng_seed=[config.seed, epoch, step],
            )
            adam_step(net.params, grads, state, config.lr_scale * noam_lr(step, config.d_model, config.warmup))

        train_loss = float(np.mean((forward_many(net, tr_freq, tr_emb) - tr_targets) ** 2))
        if val_set:
            val_loss = float(np.mean((forward_many(net, va_freq, va_emb) - va_targets) ** 2))
        else:
            val_loss = train_loss
        history.append({"epoch": epoch, "train_loss": train_loss, "val_loss": val_loss})
        if val_loss < best_val:
            best_val = val_loss
            best = net.copy_params()

    if config.epochs > 0:
        net.set_params(best)
    return net, history


def pack_folds(event_sizes: dict, folds: int) -> list[list[str]]:
    """Greedy largest-first balanced packing of events into folds."""
    if len(event_sizes) < folds:
        raise ValueError(f"need at least {folds} events, got {len(event_sizes)}")
    loads = [0] * folds
    assignment: list[list[str]] = [[] for _ in range(folds)]
    for event_id, size in sorted(event_sizes.items(), key=lambda kv: (-kv[1], kv[0])):
        target = min(range(folds), key=lambda i: (loads[i], i))
        assignment[target].append(event_id)
        loads[target] += size
    return assignment


def cross_validate(event_examples: dict, folds: int = 3, config: TrainConfig | None = None):
    """K-fold CV over events balanced by tweet counts.

    ``event_examples`` maps event_id -> list of TrainingExample. Returns
    (per-fold nets, held-out predictions: event_id -> {tweet_id: score},
    fold assignment).
    """
    config = config or TrainConfig()
    sizes = {e: len(exs) for e, exs in event_examples.items()}
    assignment = pack_folds(sizes, folds)

    nets = []
    predictions: dict[str, dict[int, float]] = {}
    for fold_i, held_out in enumerate(assignment):
        train_events = [e for f in assignment for e in f if e not in held_out]
        train_data = [ex for e in sorted(train_events) for ex in event_examples[e]]
        net, _ = train(train_data, config)
        nets.append(net)
        for event_id in held_out:
            exs = event_examples[event_id]
            freq, emb, _ = _stack(exs)
            scores = forward_many(net, freq, emb)
            predictions[event_id] = {
                ex.tweet_id: float(s) for ex, s in zip(exs, scores)
            }
    return nets, predictions, assignment


def save_net(path, net: SalienceNet, state: AdamState | None = None) -> None:
    p = net.params
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        for w in ("W1", "W2", "W3"):
            fh.write(struct.pack("<II", *p[w].shape))
        for name in PARAM_ORDER:
            fh.write(p[name].astype("<f4").tobytes())
        if state is None:
            fh.write(b"\x00")
        else:
            fh.write(b"\x01")
            for name in PARAM_ORDER:
                fh.write(state.m[name].astype("<f4").tobytes())
                fh.write(state.v[name].astype("<f4").tobytes())
            fh.write(struct.pack("<Q", state.t))


def load_net(path, dropout_p: float = 0.5):
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: bad checkpoint magic")
        shapes = {}
        for w in ("W1", "W2", "W3"):
            shapes[w] = struct.unpack("<II", fh.read(8))
        freq_dim, hidden_freq = shapes["W1"]
        joint_in, hidden_joint = shapes["W2"]
        emb_dim = joint_in - hidden_freq
        config = NetConfig(
            freq_dim=freq_dim,
            emb_dim=emb_dim,
            hidden_freq=hidden_freq,
            hidden_joint=hidden_joint,
            dropout_p=dropout_p,
        )
        net = SalienceNet(config, seed=0)
        all_shapes = {
            "W1": shapes["W1"], "b1": (hidden_freq,),
            "W2": shapes["W2"], "b2": (hidden_joint,),
            "W3": shapes["W3"], "b3": (1,),
        }

        def read_array(shape):
            n = int(np.prod(shape))
            raw = fh.read(4 * n)
            if len(raw) != 4 * n:
                raise ValueError(f"{path}: truncated checkpoint")
            return np.frombuffer(raw, dtype="<f4").astype(np.float64).reshape(shape)

        for name in PARAM_ORDER:
            net.params[name] = read_array(all_shapes[name])
        flag = fh.read(1)
        state = None
        if flag == b"\x01":
            state = AdamState(net.params)
            for name in PARAM_ORDER:
                state.m[name] = read_array(all_shapes[name])
                state.v[name] = read_array(all_shapes[name])
            (state.t,) = struct.unpack("<Q", fh.read(8))
    return net, state
