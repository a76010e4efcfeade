"""Distance-weighted classification head over frozen hyperbolic label embeddings.

The head projects an input feature vector through a small MLP, maps the
projection into the Poincaré ball with the exponential map, and weights the
usual softmax cross-entropy of each training row by the hyperbolic distance
between the projected point and the gold label's embedding.  Rows far from
their label in hyperbolic space therefore dominate the gradient.  Decoding
turns the class probabilities into a label set by Z-score thresholding.

Multi-label training data is first exploded into single-label rows; the
label embeddings are never updated here.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .cones import LabelEmbedding, label_distance
from .errors import DimMismatch, NonFiniteLoss, UnknownLabel
from .hyperbolic import exp_map_origin, poincare_distance, poincare_distance_grad_u
from .metrics import PredictionSet
from .modelio import (
    open_model,
    read_block,
    read_f64,
    read_header,
    read_str,
    write_block,
    write_f64,
    write_header,
    write_str,
)
from .nn import batch_indices, check_finite, glorot, softmax

logger = logging.getLogger(__name__)

MAGIC = b"HPMO"


@dataclass
class HypemoConfig:
    hidden: int = 128
    embed_dim: int | None = None     # defaults to the label embedding's dim
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    zscore_threshold: float = 1.0
    detach_weight: bool = False      # stop gradients through the distance factor


@dataclass
class HypemoModel:
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    leaves: list[str]
    config: HypemoConfig
    label_embedding: LabelEmbedding | None = field(default=None, repr=False)

    @property
    def feature_dim(self) -> int:
        return self.w1.shape[1]


def explode_multilabel(samples: list[tuple[str, np.ndarray, set[str]]]
                       ) -> list[tuple[str, np.ndarray, str]]:
    """One output row per (sample, label) pair; empty-label rows are dropped.

    Row order follows the input; labels within a sample are emitted in
    sorted order so the expansion is deterministic for set-valued input.
    """
    rows: list[tuple[str, np.ndarray, str]] = []
    dropped = 0
    for sample_id, feature, labels in samples:
        if not labels:
            dropped += 1
            continue
        for label in sorted(labels):
            rows.append((sample_id, feature, label))
    if dropped:
        logger.warning("explode_multilabel dropped %d rows with empty label sets", dropped)
    return rows


def _mlp(m: HypemoModel, feats: np.ndarray):
    if feats.shape[1] != m.feature_dim:
        raise DimMismatch(f"feature dim {feats.shape[1]}, model expects {m.feature_dim}")
    h = np.tanh(feats @ m.w1.T + m.b1)
    z = h @ m.w2.T + m.b2
    logits = z @ m.w3.T + m.b3
    check_finite(logits, "logits")
    return h, z, logits, softmax(logits)


def forward(m: HypemoModel, feature: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Class probabilities and the ball projection of one feature vector."""
    feats = np.asarray(feature, dtype=np.float64).reshape(1, -1)
    _, z, _, probs = _mlp(m, feats)
    return probs[0], exp_map_origin(z[0])


def _nearest_gold_node(emb: LabelEmbedding, point: np.ndarray, label: str) -> np.ndarray:
    node_ids = emb.label_to_nodes.get(label)
    if not node_ids:
        raise UnknownLabel(f"label {label!r} has no embedding nodes")
    best = min(node_ids, key=lambda nid: poincare_distance_sq(point, emb.vectors[nid]))
    return emb.vectors[best]


def poincare_distance_sq(u: np.ndarray, v: np.ndarray) -> float:
    # Monotone surrogate of the distance, cheap enough for argmin scans.
    du = 1.0 - float(u @ u)
    dv = 1.0 - float(v @ v)
    diff = u - v
    return float(diff @ diff) / (du * dv)


def hypemo_loss(m: HypemoModel, feature: np.ndarray, gold_leaf: str) -> float:
    """Distance-to-gold-label weight times cross-entropy, for one row."""
    if m.label_embedding is None:
        raise UnknownLabel("model has no label embedding attached")
    if gold_leaf not in m.leaves:
        raise UnknownLabel(f"gold label {gold_leaf!r} is not a model class")
    probs, point = forward(m, feature)
    weight = label_distance(m.label_embedding, point, gold_leaf)
    ce = -float(np.log(max(probs[m.leaves.index(gold_leaf)], 1e-300)))
    return weight * ce


def _loss_and_grads(m: HypemoModel, feats: np.ndarray, gold_idx: np.ndarray):
    """Mean loss over the batch and gradients for all six parameter blocks."""
    emb = m.label_embedding
    h, z, _, probs = _mlp(m, feats)
    n = feats.shape[0]

    weights = np.empty(n)
    ces = np.empty(n)
    d_z_dist = np.zeros_like(z)
    for i in range(n):
        zi = z[i]
        u = exp_map_origin(zi)
        v = _nearest_gold_node(emb, u, m.leaves[gold_idx[i]])
        weights[i] = poincare_distance(u, v)
        ces[i] = -np.log(max(probs[i, gold_idx[i]], 1e-300))
        if not m.config.detach_weight:
            du = poincare_distance_grad_u(u, v)
            # apply the (symmetric) exp-map Jacobian without materializing it
            r = float(np.linalg.norm(zi))
            if r < 1e-12:
                d_z_dist[i] = 0.5 * du
            else:
                s = np.tanh(r / 2.0) / r
                ds = (0.5 * r / np.cosh(r / 2.0) ** 2 - np.tanh(r / 2.0)) / r**2
                d_z_dist[i] = s * du + (ds / r) * float(zi @ du) * zi
            d_z_dist[i] *= ces[i]

    loss = float(np.mean(weights * ces))

    d_logits = probs.copy()
    d_logits[np.arange(n), gold_idx] -= 1.0
    d_logits *= weights[:, None]
    d_logits /= n
    d_z = d_logits @ m.w3 + d_z_dist / n

    g_w3 = d_logits.T @ z
    g_b3 = d_logits.sum(axis=0)
    g_w2 = d_z.T @ h
    g_b2 = d_z.sum(axis=0)
    d_h = d_z @ m.w2
    d_z1 = d_h * (1.0 - h * h)
    g_w1 = d_z1.T @ feats
    g_b1 = d_z1.sum(axis=0)
    return loss, (g_w1, g_b1, g_w2, g_b2, g_w3, g_b3)


def init_model(feature_dim: int, leaves: list[str], label_embedding: LabelEmbedding,
               config: HypemoConfig) -> HypemoModel:
    embed_dim = config.embed_dim or label_embedding.dim
    rng = np.random.default_rng(config.seed)
    return HypemoModel(
        w1=glorot(rng, config.hidden, feature_dim),
        b1=np.zeros(config.hidden),
        w2=glorot(rng, embed_dim, config.hidden),
        b2=np.zeros(embed_dim),
        w3=glorot(rng, len(leaves), embed_dim),
        b3=np.zeros(len(leaves)),
        leaves=list(leaves),
        config=replace(config, embed_dim=embed_dim),
        label_embedding=label_embedding,
    )


def train_hypemo(data: list[tuple[str, np.ndarray, str]],
                 label_embedding: LabelEmbedding,
                 leaves: list[str],
                 config: HypemoConfig | None = None) -> HypemoModel:
    """Mini-batch gradient descent on exploded single-label rows.

    Deterministic given config.seed (row shuffling included); the label
    embedding stays frozen.  Gradients flow through both the distance
    weight and the cross-entropy unless config.detach_weight is set.
    """
    config = config or HypemoConfig()
    feats = np.asarray([row[1] for row in data], dtype=np.float64)
    label_pos = {label: i for i, label in enumerate(leaves)}
    try:
        gold_idx = np.asarray([label_pos[row[2]] for row in data], dtype=np.intp)
    except KeyError as exc:
        raise UnknownLabel(f"training label {exc.args[0]!r} is not a leaf class") from exc

    model = init_model(feats.shape[1], leaves, label_embedding, config)
    rng = np.random.default_rng(config.seed + 1)
    params = [model.w1, model.b1, model.w2, model.b2, model.w3, model.b3]
    for _ in range(config.epochs):
        for batch in batch_indices(len(data), config.batch_size, rng):
            loss, grads = _loss_and_grads(model, feats[batch], gold_idx[batch])
            if not np.isfinite(loss):
                raise NonFiniteLoss("hypemo training loss diverged")
            for p, g in zip(params, grads):
                p -= config.learning_rate * g
    return model


def zscore_decode(probs: np.ndarray, tau: float, leaves: list[str]) -> set[str]:
    """Standardize the probability vector and keep classes with z above tau.

    Falls back to the argmax class (ties break toward the lowest leaf
    index) when nothing clears the threshold or the spread is zero, so the
    result is never empty.
    """
    p = np.asarray(probs, dtype=np.float64)
    std = float(np.std(p))
    if std > 0.0:
        z = (p - np.mean(p)) / std
        chosen = {leaves[i] for i in np.flatnonzero(z > tau)}
        if chosen:
            return chosen
    return {leaves[int(np.argmax(p))]}


def predict_hier(m: HypemoModel, features: list[tuple[str, np.ndarray]]
                 ) -> list[PredictionSet]:
    """Forward + Z-score decode per sample; children are retained as-is."""
    out: list[PredictionSet] = []
    if not features:
        return out
    feats = np.asarray([vec for _, vec in features], dtype=np.float64)
    _, _, _, probs = _mlp(m, feats)
    tau = m.config.zscore_threshold
    for (sample_id, _), p in zip(features, probs):
        out.append(PredictionSet.of(sample_id, zscore_decode(p, tau, m.leaves)))
    return out


def save_hypemo(m: HypemoModel, path: str | Path) -> None:
    with open_model(path, "w") as fh:
        write_header(fh, MAGIC, [m.feature_dim, m.w1.shape[0], m.w2.shape[0],
                                 len(m.leaves), int(m.config.detach_weight)])
        write_f64(fh, m.config.zscore_threshold)
        for leaf in m.leaves:
            write_str(fh, leaf)
        for block in (m.w1, m.b1, m.w2, m.b2, m.w3, m.b3):
            write_block(fh, block)


def load_hypemo(path: str | Path) -> HypemoModel:
    """Load weights for prediction; no label embedding is attached."""
    with open_model(path, "r") as fh:
        feat, hidden, embed, n_leaves, detach = read_header(fh, MAGIC, path)
        tau = read_f64(fh)[0]
        leaves = [read_str(fh) for _ in range(n_leaves)]
        w1 = read_block(fh, (hidden, feat))
        b1 = read_block(fh, (hidden,))
        w2 = read_block(fh, (embed, hidden))
        b2 = read_block(fh, (embed,))
        w3 = read_block(fh, (n_leaves, embed))
        b3 = read_block(fh, (n_leaves,))
    cfg = HypemoConfig(hidden=hidden, embed_dim=embed,
                       zscore_threshold=tau, detach_weight=bool(detach))
    return HypemoModel(w1=w1, b1=b1, w2=w2, b2=b2, w3=w3, b3=b3,
                       leaves=leaves, config=cfg)
