"""Independent oracles and fixture builders used across the test suite.

Everything here deliberately avoids the library's own implementations:
ancestor closures are computed by repeated edge relaxation, root paths by
plain DFS, scores by direct counting, and gradients by central finite
differences.
"""
from __future__ import annotations

import numpy as np

import persuasion as P


# -- graph oracles ------------------------------------------------------------

def closure_ancestors(nodes, edges, root):
    """Ancestor sets by fixpoint edge relaxation; root/self not removed."""
    anc = {n: set() for n in nodes}
    changed = True
    while changed:
        changed = False
        for parent, child in edges:
            new = anc[child] | {parent} | anc[parent]
            if new != anc[child]:
                anc[child] = new
                changed = True
    return anc


def enumerate_root_paths(nodes, edges, root):
    """All root paths by DFS; returns list of tuples of labels."""
    children = {n: [] for n in nodes}
    for parent, child in edges:
        children[parent].append(child)
    paths = []

    def dfs(node, path):
        path = path + (node,)
        paths.append(path)
        for c in children[node]:
            dfs(c, path)

    dfs(root, ())
    return paths


def brute_force_hprf(nodes, edges, root, gold: dict, pred: dict):
    """One-function hierarchical scorer: relax closures, augment, count."""
    anc = closure_ancestors(nodes, edges, root)

    def aug(labels):
        out = set()
        for x in labels:
            out |= ({x} | anc[x]) - {root}
        return out

    inter = ptot = gtot = 0
    for sid in gold:
        ag, ap = aug(gold[sid]), aug(pred[sid])
        inter += len(ag & ap)
        ptot += len(ap)
        gtot += len(ag)
    hp = inter / ptot if ptot else 0.0
    hr = inter / gtot if gtot else 0.0
    f1 = 2 * hp * hr / (hp + hr) if hp + hr else 0.0
    return hp, hr, f1


def random_dag_doc(rng: np.random.Generator, n_nodes: int, extra_edge_prob=0.08):
    """Connected rooted DAG document: spanning edges plus random forward edges."""
    names = [f"n{i}" for i in range(n_nodes)]
    edges = []
    seen = set()
    for i in range(1, n_nodes):
        parent = names[int(rng.integers(0, i))]
        edges.append([parent, names[i]])
        seen.add((parent, names[i]))
    for i in range(n_nodes):
        for j in range(i + 1, n_nodes):
            if (names[i], names[j]) not in seen and rng.random() < extra_edge_prob:
                edges.append([names[i], names[j]])
                seen.add((names[i], names[j]))
    return {"root": names[0], "nodes": names, "edges": edges}


# -- numeric oracle -----------------------------------------------------------

def central_fd(loss_fn, param: np.ndarray, idx, eps: float = 1e-6) -> float:
    orig = param[idx]
    param[idx] = orig + eps
    lp = loss_fn()
    param[idx] = orig - eps
    lm = loss_fn()
    param[idx] = orig
    return (lp - lm) / (2.0 * eps)


def rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(a), abs(b), 1e-10)


# -- fixture builders ---------------------------------------------------------

TINY_DOC = {
    "root": "P",
    "nodes": ["P", "X", "Y", "a", "b", "c", "d"],
    "edges": [["P", "X"], ["P", "Y"], ["X", "a"], ["X", "b"],
              ["Y", "b"], ["Y", "c"], ["Y", "d"]],
    "definitions": {"a": "first", "b": "second", "c": "third", "d": "fourth"},
}


def tiny_taxonomy():
    return P.parse_taxonomy(TINY_DOC)


def blob_rows(taxonomy, dim=16, per_leaf=50, noise=0.3, seed=42, spread=3.0):
    """One well-separated Gaussian blob per leaf; single-label rows."""
    leaves = P.leaf_set(taxonomy)
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((len(leaves), dim)) * spread
    rows = []
    gold = []
    for li, leaf in enumerate(leaves):
        for j in range(per_leaf):
            sid = f"s{li}_{j}"
            vec = centers[li] + rng.standard_normal(dim) * noise
            rows.append((sid, vec, leaf))
            gold.append(P.PredictionSet.of(sid, {leaf}))
    return rows, gold
