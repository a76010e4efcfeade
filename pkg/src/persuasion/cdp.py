"""Definition-aware multi-label head.

Two towers trained jointly: a per-class sigmoid classifier over the sample
feature, and an auxiliary matcher that sees a (sample feature, class
definition feature) pair and judges whether the definition belongs to one
of the sample's gold classes.  The auxiliary binary cross-entropy is mixed
in with weight lambda_aux.  Definition features are precomputed vectors
keyed by leaf label, produced by the same extractor as the sample features.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DimMismatch,
    GoldEmpty,
    MissingDefinitionFeature,
    NonFiniteLoss,
    UnknownLabel,
)
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
from .nn import batch_indices, bce, glorot, sigmoid

MAGIC = b"CDPM"


@dataclass
class CdpConfig:
    trunk_hidden: int = 128
    match_hidden: int = 128
    lambda_aux: float = 0.3
    threshold: float = 0.5
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0


@dataclass
class CdpModel:
    a1: np.ndarray      # trunk: feature -> hidden
    c1: np.ndarray
    a2: np.ndarray      # class head: hidden -> L sigmoids
    c2: np.ndarray
    b1: np.ndarray      # match head: (feature + definition) -> hidden
    d1: np.ndarray
    b2: np.ndarray      # match head: hidden -> 1 sigmoid
    d2: np.ndarray
    leaves: list[str]
    config: CdpConfig
    definition_features: dict[str, np.ndarray] = field(default_factory=dict, repr=False)

    @property
    def feature_dim(self) -> int:
        return self.a1.shape[1]

    @property
    def definition_dim(self) -> int:
        return self.b1.shape[1] - self.a1.shape[1]


def _class_forward(m: CdpModel, feats: np.ndarray):
    if feats.shape[1] != m.feature_dim:
        raise DimMismatch(f"feature dim {feats.shape[1]}, model expects {m.feature_dim}")
    t = np.tanh(feats @ m.a1.T + m.c1)
    scores = sigmoid(t @ m.a2.T + m.c2)
    return t, scores


def _match_forward(m: CdpModel, pair_feats: np.ndarray):
    if pair_feats.shape[1] != m.b1.shape[1]:
        raise DimMismatch(f"pair dim {pair_feats.shape[1]}, match head expects {m.b1.shape[1]}")
    h = np.tanh(pair_feats @ m.b1.T + m.d1)
    q = sigmoid(h @ m.b2.T + m.d2)[:, 0]
    return h, q


def class_scores(m: CdpModel, feature: np.ndarray) -> np.ndarray:
    """Per-class sigmoid scores for a single feature vector."""
    return _class_forward(m, np.asarray(feature, dtype=np.float64).reshape(1, -1))[1][0]


def cdp_loss(m: CdpModel, sample_feature: np.ndarray, definition_feature: np.ndarray,
             gold: set[str], matched_label: str) -> float:
    """Sum of per-class BCE plus lambda_aux times the definition-match BCE."""
    f = np.asarray(sample_feature, dtype=np.float64).reshape(1, -1)
    fd = np.asarray(definition_feature, dtype=np.float64).reshape(1, -1)
    _, scores = _class_forward(m, f)
    targets = np.array([1.0 if leaf in gold else 0.0 for leaf in m.leaves])
    class_term = float(np.sum(bce(scores, targets)))
    _, q = _match_forward(m, np.concatenate([f, fd], axis=1))
    match_target = 1.0 if matched_label in gold else 0.0
    return class_term + m.config.lambda_aux * float(bce(q[0], match_target))


def cdp_loss_grads(m: CdpModel, sample_feature: np.ndarray,
                   definition_feature: np.ndarray, gold: set[str],
                   matched_label: str):
    """cdp_loss value plus gradients for all eight parameter blocks."""
    f = np.asarray(sample_feature, dtype=np.float64).reshape(1, -1)
    fd = np.asarray(definition_feature, dtype=np.float64).reshape(1, -1)
    t, scores = _class_forward(m, f)
    targets = np.array([[1.0 if leaf in gold else 0.0 for leaf in m.leaves]])
    class_term = float(np.sum(bce(scores, targets)))

    pair = np.concatenate([f, fd], axis=1)
    h, q = _match_forward(m, pair)
    match_target = 1.0 if matched_label in gold else 0.0
    lam = m.config.lambda_aux
    loss = class_term + lam * float(bce(q[0], match_target))

    d_o = scores - targets                       # d(sum BCE)/d class logits
    g_a2 = d_o.T @ t
    g_c2 = d_o.sum(axis=0)
    d_t = (d_o @ m.a2) * (1.0 - t * t)
    g_a1 = d_t.T @ f
    g_c1 = d_t.sum(axis=0)

    d_q = lam * (q - match_target).reshape(1, 1)  # d/d match logit
    g_b2 = d_q.T @ h
    g_d2 = d_q.sum(axis=0)
    d_h = (d_q @ m.b2) * (1.0 - h * h)
    g_b1 = d_h.T @ pair
    g_d1 = d_h.sum(axis=0)
    return loss, (g_a1, g_c1, g_a2, g_c2, g_b1, g_d1, g_b2, g_d2)


def sample_definition_pairs(gold: set[str], leaves: list[str], seed: int
                            ) -> list[tuple[str, int]]:
    """One positive and (when available) one negative definition per call.

    The positive is uniform over the gold set, the negative uniform over
    the remaining leaves; fully determined by the seed.
    """
    if not gold:
        raise GoldEmpty("cannot sample definition pairs for an empty gold set")
    unknown = gold - set(leaves)
    if unknown:
        raise UnknownLabel(f"gold labels not in leaf set: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    gold_sorted = sorted(gold)
    pos = gold_sorted[int(rng.integers(len(gold_sorted)))]
    negatives = [leaf for leaf in leaves if leaf not in gold]
    if not negatives:
        return [(pos, 1)]
    neg = negatives[int(rng.integers(len(negatives)))]
    return [(pos, 1), (neg, 0)]


def init_model(feature_dim: int, definition_dim: int, leaves: list[str],
               config: CdpConfig) -> CdpModel:
    rng = np.random.default_rng(config.seed)
    pair_dim = feature_dim + definition_dim
    return CdpModel(
        a1=glorot(rng, config.trunk_hidden, feature_dim),
        c1=np.zeros(config.trunk_hidden),
        a2=glorot(rng, len(leaves), config.trunk_hidden),
        c2=np.zeros(len(leaves)),
        b1=glorot(rng, config.match_hidden, pair_dim),
        d1=np.zeros(config.match_hidden),
        b2=glorot(rng, 1, config.match_hidden),
        d2=np.zeros(1),
        leaves=list(leaves),
        config=config,
    )


def train_cdp(data: list[tuple[str, np.ndarray, set[str]]],
              definitions: dict[str, np.ndarray],
              leaves: list[str],
              config: CdpConfig | None = None) -> CdpModel:
    """Joint mini-batch training of the class head and the match head.

    Every leaf must have a definition feature vector; rows keep their full
    multi-label gold sets (no explosion).  Deterministic per config.seed.
    """
    config = config or CdpConfig()
    missing = [leaf for leaf in leaves if leaf not in definitions]
    if missing:
        raise MissingDefinitionFeature(f"no definition feature for: {missing}")

    feats = np.asarray([row[1] for row in data], dtype=np.float64)
    targets = np.zeros((len(data), len(leaves)))
    leaf_pos = {leaf: i for i, leaf in enumerate(leaves)}
    for i, (_, _, gold) in enumerate(data):
        for label in gold:
            if label not in leaf_pos:
                raise UnknownLabel(f"gold label {label!r} is not a leaf class")
            targets[i, leaf_pos[label]] = 1.0

    model = init_model(feats.shape[1], len(next(iter(definitions.values()))),
                       leaves, config)
    model.definition_features = {k: np.asarray(v, dtype=np.float64)
                                 for k, v in definitions.items()}
    rng = np.random.default_rng(config.seed + 1)
    lam = config.lambda_aux

    for _ in range(config.epochs):
        for batch in batch_indices(len(data), config.batch_size, rng):
            n = len(batch)
            fb = feats[batch]
            yb = targets[batch]
            t, scores = _class_forward(model, fb)
            class_loss = float(np.sum(bce(scores, yb))) / n

            # draw the auxiliary pairs for this batch, seeded from the loop rng
            pair_rows: list[int] = []
            pair_feats: list[np.ndarray] = []
            pair_targets: list[float] = []
            pair_scale: list[float] = []
            for j, row_idx in enumerate(batch):
                gold = data[row_idx][2]
                pairs = sample_definition_pairs(gold, leaves, int(rng.integers(2**63)))
                for label, bit in pairs:
                    pair_rows.append(j)
                    pair_feats.append(np.concatenate([fb[j], model.definition_features[label]]))
                    pair_targets.append(float(bit))
                    pair_scale.append(1.0 / len(pairs))

            pf = np.asarray(pair_feats)
            pt = np.asarray(pair_targets)
            ps = np.asarray(pair_scale)
            h, q = _match_forward(model, pf)
            aux_loss = float(np.sum(ps * bce(q, pt))) / n
            if not np.isfinite(class_loss + aux_loss):
                raise NonFiniteLoss("cdp training loss diverged")

            d_o = (scores - yb) / n
            g_a2 = d_o.T @ t
            g_c2 = d_o.sum(axis=0)
            d_t = (d_o @ model.a2) * (1.0 - t * t)
            g_a1 = d_t.T @ fb
            g_c1 = d_t.sum(axis=0)

            d_q = (lam * ps * (q - pt) / n).reshape(-1, 1)
            g_b2 = d_q.T @ h
            g_d2 = d_q.sum(axis=0)
            d_h = (d_q @ model.b2) * (1.0 - h * h)
            g_b1 = d_h.T @ pf
            g_d1 = d_h.sum(axis=0)

            lr = config.learning_rate
            for p, g in zip((model.a1, model.c1, model.a2, model.c2,
                             model.b1, model.d1, model.b2, model.d2),
                            (g_a1, g_c1, g_a2, g_c2, g_b1, g_d1, g_b2, g_d2)):
                p -= lr * g
    return model


def predict_cdp(m: CdpModel, features: list[tuple[str, np.ndarray]]
                ) -> list[PredictionSet]:
    """Labels whose sigmoid clears the threshold; argmax fallback keeps the
    prediction non-empty (ties break toward the lowest leaf index)."""
    out: list[PredictionSet] = []
    if not features:
        return out
    feats = np.asarray([vec for _, vec in features], dtype=np.float64)
    _, scores = _class_forward(m, feats)
    thr = m.config.threshold
    for (sample_id, _), s in zip(features, scores):
        chosen = {m.leaves[i] for i in np.flatnonzero(s > thr)}
        if not chosen:
            chosen = {m.leaves[int(np.argmax(s))]}
        out.append(PredictionSet.of(sample_id, chosen))
    return out


def save_cdp(m: CdpModel, path: str | Path) -> None:
    with open_model(path, "w") as fh:
        write_header(fh, MAGIC, [m.feature_dim, m.definition_dim,
                                 m.a1.shape[0], m.b1.shape[0], len(m.leaves)])
        write_f64(fh, m.config.lambda_aux, m.config.threshold)
        for leaf in m.leaves:
            write_str(fh, leaf)
        for block in (m.a1, m.c1, m.a2, m.c2, m.b1, m.d1, m.b2, m.d2):
            write_block(fh, block)


def load_cdp(path: str | Path) -> CdpModel:
    with open_model(path, "r") as fh:
        feat, def_dim, trunk_hidden, match_hidden, n_leaves = read_header(fh, MAGIC, path)
        lam, thr = read_f64(fh, 2)
        leaves = [read_str(fh) for _ in range(n_leaves)]
        a1 = read_block(fh, (trunk_hidden, feat))
        c1 = read_block(fh, (trunk_hidden,))
        a2 = read_block(fh, (n_leaves, trunk_hidden))
        c2 = read_block(fh, (n_leaves,))
        b1 = read_block(fh, (match_hidden, feat + def_dim))
        d1 = read_block(fh, (match_hidden,))
        b2 = read_block(fh, (1, match_hidden))
        d2 = read_block(fh, (1,))
    cfg = CdpConfig(trunk_hidden=trunk_hidden, match_hidden=match_hidden,
                    lambda_aux=lam, threshold=thr)
    return CdpModel(a1=a1, c1=c1, a2=a2, c2=c2, b1=b1, d1=d1, b2=b2, d2=d2,
                    leaves=leaves, config=cfg)
