"""Persuasive-or-not detector over concatenated text and image features.

Two linear layers with a squashing activation in between (a sigmoid, as an
unusual but deliberate choice; tanh is available as a config switch) and a
final sigmoid output.  The loss is binary cross-entropy with the positive
term weighted by w = (K - f) / f computed from the observed training
counts, which counteracts the positive-heavy class balance.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DegenerateClassBalance,
    DimMismatch,
    IdMismatch,
    LengthMismatch,
    NonFiniteLoss,
    ProbOutOfRange,
)
from .modelio import (
    open_model,
    read_block,
    read_f64,
    read_header,
    write_block,
    write_f64,
    write_header,
)
from .nn import PROB_CLAMP, batch_indices, glorot, sigmoid

MAGIC = b"BINP"

ACTIVATIONS = ("sigmoid", "tanh")


@dataclass
class BinaryConfig:
    hidden: int = 64
    activation: str = "sigmoid"
    learning_rate: float = 0.1
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    threshold: float = 0.5


@dataclass
class BinaryModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray      # (1, hidden)
    b2: np.ndarray      # (1,)
    weight: float       # imbalance weight w
    config: BinaryConfig

    @property
    def input_dim(self) -> int:
        return self.w1.shape[1]


def imbalance_weight(total: int, positives: int) -> float:
    """Positive-class loss weight (K - f) / f."""
    if positives <= 0 or positives >= total:
        raise DegenerateClassBalance(
            f"positive count {positives} of {total} leaves a single class")
    return (total - positives) / positives


def weighted_bce(probs, targets, w: float) -> float:
    """-(1/N) sum of [w y log x + (1 - w)(1 - y) log(1 - x)], probs clamped."""
    x = np.asarray(probs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.shape != y.shape:
        raise LengthMismatch(f"{x.shape} probs vs {y.shape} targets")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise ProbOutOfRange("probabilities must lie in [0, 1]")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ProbOutOfRange("targets must be 0 or 1")
    x = np.clip(x, PROB_CLAMP, 1.0 - PROB_CLAMP)
    terms = w * y * np.log(x) + (1.0 - w) * (1.0 - y) * np.log(1.0 - x)
    return float(-np.mean(terms))


def _forward(m: BinaryModel, feats: np.ndarray):
    if feats.shape[1] != m.input_dim:
        raise DimMismatch(f"feature dim {feats.shape[1]}, model expects {m.input_dim}")
    z1 = feats @ m.w1.T + m.b1
    a = sigmoid(z1) if m.config.activation == "sigmoid" else np.tanh(z1)
    probs = sigmoid(a @ m.w2.T + m.b2)[:, 0]
    return a, probs


def binary_loss_grads(m: BinaryModel, feats: np.ndarray, targets: np.ndarray):
    """weighted_bce over the batch plus gradients for the four blocks."""
    a, probs = _forward(m, feats)
    y = np.asarray(targets, dtype=np.float64)
    n = len(y)
    loss = weighted_bce(probs, y, m.weight)
    # d loss / d output logit, using d log(p)/d o = 1 - p and d log(1-p)/d o = -p
    d_o = (-(m.weight * y * (1.0 - probs)
             - (1.0 - m.weight) * (1.0 - y) * probs) / n).reshape(-1, 1)
    g_w2 = d_o.T @ a
    g_b2 = d_o.sum(axis=0)
    d_a = d_o @ m.w2
    if m.config.activation == "sigmoid":
        d_z1 = d_a * a * (1.0 - a)
    else:
        d_z1 = d_a * (1.0 - a * a)
    g_w1 = d_z1.T @ feats
    g_b1 = d_z1.sum(axis=0)
    return loss, (g_w1, g_b1, g_w2, g_b2)


def _align_features(text_features: list[tuple[str, np.ndarray]],
                    image_features: list[tuple[str, np.ndarray]]) -> tuple[list[str], np.ndarray]:
    text_map = dict(text_features)
    image_map = dict(image_features)
    if text_map.keys() != image_map.keys():
        only_t = sorted(set(text_map) - set(image_map))
        only_i = sorted(set(image_map) - set(text_map))
        raise IdMismatch(f"text/image id mismatch (text only: {only_t}, image only: {only_i})",
                         only_left=set(only_t), only_right=set(only_i))
    ids = [sid for sid, _ in text_features]
    feats = np.asarray([np.concatenate([text_map[sid], image_map[sid]]) for sid in ids],
                       dtype=np.float64)
    return ids, feats


def init_model(input_dim: int, weight: float, config: BinaryConfig) -> BinaryModel:
    if config.activation not in ACTIVATIONS:
        raise ValueError(f"activation must be one of {ACTIVATIONS}")
    rng = np.random.default_rng(config.seed)
    return BinaryModel(
        w1=glorot(rng, config.hidden, input_dim),
        b1=np.zeros(config.hidden),
        w2=glorot(rng, 1, config.hidden),
        b2=np.zeros(1),
        weight=weight,
        config=config,
    )


def train_binary(text_features: list[tuple[str, np.ndarray]],
                 image_features: list[tuple[str, np.ndarray]],
                 labels: dict[str, int],
                 config: BinaryConfig | None = None) -> BinaryModel:
    """Deterministic mini-batch training of the two-layer detector.

    The imbalance weight is computed from the observed training counts; a
    single-class label set is rejected rather than silently degenerate.
    """
    config = config or BinaryConfig()
    ids, feats = _align_features(text_features, image_features)
    missing = sorted(set(ids) - set(labels))
    if missing:
        raise IdMismatch(f"no label for ids: {missing}", only_left=set(missing))
    y = np.asarray([labels[sid] for sid in ids], dtype=np.float64)
    weight = imbalance_weight(len(y), int(y.sum()))

    model = init_model(feats.shape[1], weight, config)
    rng = np.random.default_rng(config.seed + 1)
    for _ in range(config.epochs):
        for batch in batch_indices(len(y), config.batch_size, rng):
            loss, grads = binary_loss_grads(model, feats[batch], y[batch])
            if not np.isfinite(loss):
                raise NonFiniteLoss("binary training loss diverged")
            for p, g in zip((model.w1, model.b1, model.w2, model.b2), grads):
                p -= config.learning_rate * g
    return model


def predict_binary(m: BinaryModel,
                   text_features: list[tuple[str, np.ndarray]],
                   image_features: list[tuple[str, np.ndarray]]
                   ) -> list[tuple[str, int, float]]:
    """(id, bit, prob) per sample; prob >= threshold decides the positive bit."""
    ids, feats = _align_features(text_features, image_features)
    _, probs = _forward(m, feats)
    thr = m.config.threshold
    return [(sid, int(p >= thr), float(p)) for sid, p in zip(ids, probs)]


def save_binary(m: BinaryModel, path: str | Path) -> None:
    with open_model(path, "w") as fh:
        write_header(fh, MAGIC, [m.input_dim, m.w1.shape[0],
                                 ACTIVATIONS.index(m.config.activation)])
        write_f64(fh, m.weight, m.config.threshold)
        for block in (m.w1, m.b1, m.w2, m.b2):
            write_block(fh, block)


def load_binary(path: str | Path) -> BinaryModel:
    with open_model(path, "r") as fh:
        input_dim, hidden, act_idx = read_header(fh, MAGIC, path)
        weight, thr = read_f64(fh, 2)
        w1 = read_block(fh, (hidden, input_dim))
        b1 = read_block(fh, (hidden,))
        w2 = read_block(fh, (1, hidden))
        b2 = read_block(fh, (1,))
    cfg = BinaryConfig(hidden=hidden, activation=ACTIVATIONS[act_idx], threshold=thr)
    return BinaryModel(w1=w1, b1=b1, w2=w2, b2=b2, weight=weight, config=cfg)
