"""Hyperbolic entailment-cone embeddings for label trees.

Each tree node gets a point in an annulus of the Poincaré ball.  A parent's
cone opens toward the boundary with aperture

    psi(x) = arcsin(k (1 - |x|^2) / |x|),

defined for |x| >= inner_radius(k), and a child y violates the cone by

    E(x, y) = max(0, Xi(x, y) - psi(x)),

where Xi is the closed-form angle between the cone axis at x and y.  Edges
of the tree are trained to zero energy (child inside parent's cone) while
corrupted pairs are pushed at least a margin away, using Riemannian SGD:
Euclidean gradient, metric rescale, step, projection back to the annulus.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    BadK,
    EmptyTree,
    InsideInnerRadius,
    NonFiniteLoss,
    UnknownLabel,
)
from .hyperbolic import MAX_NORM, poincare_distance
from .taxonomy import LabelTree

# Keeps trained vectors strictly outside the aperture singularity at the
# inner radius.
ANNULUS_MARGIN = 1e-3


def inner_radius(k: float) -> float:
    """Radius below which the aperture is undefined: root of k r^2 + r - k."""
    if not 0.0 < k < 1.0:
        raise BadK(f"k must be in (0, 1), got {k}")
    return (-1.0 + math.sqrt(1.0 + 4.0 * k * k)) / (2.0 * k)


def cone_aperture(x, k: float) -> float:
    """Half-opening angle (radians) of the cone rooted at x."""
    x = np.asarray(x, dtype=np.float64)
    r = float(np.linalg.norm(x))
    if r < inner_radius(k) - 1e-12:
        raise InsideInnerRadius(f"norm {r} below inner radius {inner_radius(k)}")
    arg = k * (1.0 - r * r) / r
    return float(np.arcsin(min(max(arg, -1.0), 1.0)))


def _cone_terms(parent: np.ndarray, child: np.ndarray, k: float):
    """Shared quantities for the energy and its gradient."""
    a = float(parent @ parent)
    b = float(child @ child)
    c = float(parent @ child)
    m = max(a + b - 2.0 * c, 1e-18)
    dd = max(1.0 + a * b - 2.0 * c, 1e-18)
    num = c * (1.0 + a) - a * (1.0 + b)
    den = math.sqrt(a * m * dd)
    rho = min(max(num / den, -1.0), 1.0)
    xi = math.acos(rho)
    return a, b, c, m, dd, num, den, rho, xi


def cone_energy(parent, child, k: float) -> float:
    """Cone violation max(0, Xi(parent, child) - psi(parent))."""
    parent = np.asarray(parent, dtype=np.float64)
    child = np.asarray(child, dtype=np.float64)
    psi = cone_aperture(parent, k)
    r_child = float(np.linalg.norm(child))
    if r_child < inner_radius(k) - 1e-12:
        raise InsideInnerRadius(f"child norm {r_child} below inner radius")
    *_, xi = _cone_terms(parent, child, k)
    return max(0.0, xi - psi)


def cone_energy_grad(parent: np.ndarray, child: np.ndarray, k: float
                     ) -> tuple[float, np.ndarray, np.ndarray]:
    """Energy and its Euclidean gradients w.r.t. parent and child.

    Subgradient 0 at the max(0, .) kink; arccos/arcsin derivatives are
    clamped away from their end-point singularities.
    """
    a, b, c, m, dd, num, den, rho, xi = _cone_terms(parent, child, k)
    psi = cone_aperture(parent, k)
    energy = xi - psi
    if energy <= 0.0:
        z = np.zeros_like(parent)
        return 0.0, z, z.copy()

    dnum_dp = child * (1.0 + a) + 2.0 * parent * (c - 1.0 - b)
    dnum_dc = parent * (1.0 + a) - 2.0 * a * child

    damd_dp = (2.0 * parent * m * dd
               + a * 2.0 * (parent - child) * dd
               + a * m * (2.0 * b * parent - 2.0 * child))
    damd_dc = (a * 2.0 * (child - parent) * dd
               + a * m * (2.0 * a * child - 2.0 * parent))
    dden_dp = damd_dp / (2.0 * den)
    dden_dc = damd_dc / (2.0 * den)

    drho_dp = (dnum_dp - rho * dden_dp) / den
    drho_dc = (dnum_dc - rho * dden_dc) / den
    acos_scale = -1.0 / math.sqrt(max(1.0 - rho * rho, 1e-15))
    dxi_dp = acos_scale * drho_dp
    dxi_dc = acos_scale * drho_dc

    u = k * (1.0 - a) / math.sqrt(a)
    asin_scale = 1.0 / math.sqrt(max(1.0 - u * u, 1e-15))
    dpsi_dp = asin_scale * (-k * (1.0 + a) / a**1.5) * parent

    return energy, dxi_dp - dpsi_dp, dxi_dc


@dataclass
class ConeTrainConfig:
    dim: int = 100
    cone_k: float = 0.1
    epochs: int = 400
    learning_rate: float = 0.1
    burn_in_epochs: int = 20
    negatives_per_positive: int = 10
    margin: float = 0.01
    grad_clip: float = 1.0
    seed: int = 0


@dataclass
class LabelEmbedding:
    """Trained cone embedding: one vector per tree node, annulus-constrained."""

    dim: int
    cone_k: float
    inner_radius: float
    vectors: dict[str, np.ndarray]
    label_to_nodes: dict[str, tuple[str, ...]]
    history: list[float] = field(default_factory=list, repr=False)


def label_distance(e: LabelEmbedding, point, label: str) -> float:
    """Distance from a ball point to a label: min over its duplicated nodes."""
    node_ids = e.label_to_nodes.get(label)
    if not node_ids:
        raise UnknownLabel(f"label {label!r} has no tree nodes in the embedding")
    return min(poincare_distance(point, e.vectors[nid]) for nid in node_ids)


def _non_relative_candidates(tree: LabelTree) -> dict[str, list[int]]:
    """For each node: indices of nodes that are neither ancestors nor
    descendants of it (corruption candidates that can never be a true pair)."""
    ids = tree.node_ids()
    pos = {nid: i for i, nid in enumerate(ids)}
    children = tree.children_map()
    parent = {n.node_id: n.parent_id for n in tree.tree_nodes}

    desc: dict[str, set[str]] = {nid: set() for nid in ids}

    def collect(nid: str) -> set[str]:
        out: set[str] = set()
        for c in children[nid]:
            out.add(c)
            out |= collect(c)
        desc[nid] = out
        return out

    collect(ids[0])
    out: dict[str, list[int]] = {}
    for nid in ids:
        banned = {nid} | desc[nid]
        p = parent[nid]
        while p is not None:
            banned.add(p)
            p = parent[p]
        out[nid] = [pos[o] for o in ids if o not in banned]
    return out


def train_label_embeddings(tree: LabelTree, cfg: ConeTrainConfig | None = None
                           ) -> LabelEmbedding:
    """Fit cone embeddings to a label tree with Riemannian SGD.

    Deterministic given cfg.seed.  The first ``burn_in_epochs`` run at a
    tenth of the learning rate to settle the random initialization.
    """
    cfg = cfg or ConeTrainConfig()
    if len(tree) == 0:
        raise EmptyTree("cannot embed an empty tree")
    rng = np.random.default_rng(cfg.seed)
    ids = tree.node_ids()
    k = cfg.cone_k
    r_min = inner_radius(k)
    lo, hi = r_min + ANNULUS_MARGIN, MAX_NORM

    vecs = np.empty((len(ids), cfg.dim))
    for i in range(len(ids)):
        direction = rng.standard_normal(cfg.dim)
        direction /= np.linalg.norm(direction)
        vecs[i] = direction * rng.uniform(r_min + 0.05, 0.4)

    def clamp(v: np.ndarray) -> np.ndarray:
        n = float(np.linalg.norm(v))
        if n < lo:
            return v * (lo / n)
        if n > hi:
            return v * (hi / n)
        return v

    def step(i: int, grad: np.ndarray, lr: float) -> None:
        # clip before rescaling: the arccos derivative blows up near the
        # cone axis and a single unbounded step can wreck the layout
        norm = float(np.linalg.norm(grad))
        if norm > cfg.grad_clip:
            grad = grad * (cfg.grad_clip / norm)
        factor = (1.0 - float(vecs[i] @ vecs[i])) ** 2 / 4.0
        vecs[i] = clamp(vecs[i] - lr * factor * grad)

    pos = {nid: i for i, nid in enumerate(ids)}
    edges = [(pos[p], pos[c]) for p, c in tree.edges()]
    candidates = _non_relative_candidates(tree)
    cand_idx = [np.asarray(candidates[ids[p]], dtype=np.intp) for p, _ in edges]

    history: list[float] = []
    for epoch in range(cfg.epochs):
        lr = cfg.learning_rate / 10.0 if epoch < cfg.burn_in_epochs else cfg.learning_rate
        order = rng.permutation(len(edges))
        epoch_loss = 0.0
        for e in order:
            p_i, c_i = edges[e]
            energy, g_p, g_c = cone_energy_grad(vecs[p_i], vecs[c_i], k)
            epoch_loss += energy
            if energy > 0.0:
                step(p_i, g_p, lr)
                step(c_i, g_c, lr)
            cands = cand_idx[e]
            if cands.size == 0:
                continue
            for n_i in rng.choice(cands, size=cfg.negatives_per_positive):
                energy, g_p, g_n = cone_energy_grad(vecs[p_i], vecs[n_i], k)
                if energy < cfg.margin:
                    epoch_loss += cfg.margin - energy
                    step(p_i, -g_p, lr)
                    step(int(n_i), -g_n, lr)
        if not math.isfinite(epoch_loss):
            raise NonFiniteLoss(f"diverged at epoch {epoch}")
        history.append(epoch_loss / max(len(edges), 1))

    return LabelEmbedding(
        dim=cfg.dim,
        cone_k=k,
        inner_radius=r_min,
        vectors={nid: vecs[i].copy() for i, nid in enumerate(ids)},
        label_to_nodes=dict(tree.label_to_nodes),
        history=history,
    )


def edge_energies(e: LabelEmbedding, tree: LabelTree) -> dict[tuple[str, str], float]:
    """Cone energy of every tree edge under the embedding."""
    return {(p, c): cone_energy(e.vectors[p], e.vectors[c], e.cone_k)
            for p, c in tree.edges()}


def save_label_embedding(e: LabelEmbedding, path: str | Path) -> None:
    doc = {
        "dim": e.dim,
        "cone_k": e.cone_k,
        "vectors": {nid: [float(x) for x in vec] for nid, vec in e.vectors.items()},
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True)
        fh.write("\n")


def load_label_embedding(path: str | Path, tree: LabelTree) -> LabelEmbedding:
    """Load an embedding file and bind it to the tree that defines its keys."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    vectors = {nid: np.asarray(v, dtype=np.float64) for nid, v in doc["vectors"].items()}
    tree_ids = set(tree.node_ids())
    if set(vectors) != tree_ids:
        missing = sorted(tree_ids - set(vectors))[:5]
        extra = sorted(set(vectors) - tree_ids)[:5]
        raise UnknownLabel(f"embedding/tree node mismatch (missing {missing}, extra {extra})")
    return LabelEmbedding(
        dim=int(doc["dim"]),
        cone_k=float(doc["cone_k"]),
        inner_radius=inner_radius(float(doc["cone_k"])),
        vectors=vectors,
        label_to_nodes=dict(tree.label_to_nodes),
    )
