import numpy as np
import pytest

import persuasion as P
from persuasion.cdp import (
    CdpConfig,
    cdp_loss_grads,
    class_scores,
    init_model,
    load_cdp,
    save_cdp,
)
from persuasion.errors import GoldEmpty, MissingDefinitionFeature
from persuasion.nn import bce
from helpers import central_fd, rel_err, tiny_taxonomy

LEAVES = ["a", "b", "c", "d"]


def make_model(seed=0, lam=0.3):
    return init_model(5, 3, LEAVES, CdpConfig(trunk_hidden=6, match_hidden=4,
                                              lambda_aux=lam, seed=seed))


def multilabel_rows(taxonomy, dim=8, per_leaf=15, seed=0):
    """Blob per leaf plus a second correlated label on a third of the rows."""
    leaves = P.leaf_set(taxonomy)
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((len(leaves), dim)) * 3.0
    rows = []
    for li, leaf in enumerate(leaves):
        buddy = leaves[(li + 1) % len(leaves)]
        for j in range(per_leaf):
            sid = f"s{li}_{j}"
            labels = {leaf}
            vec = centers[li].copy()
            if j % 3 == 0:
                labels.add(buddy)
                vec = (centers[li] + centers[(li + 1) % len(leaves)]) / 2.0
            rows.append((sid, vec + rng.standard_normal(dim) * 0.2, labels))
    return rows


# -- loss -----------------------------------------------------------------------

def test_loss_zero_when_outputs_match_targets():
    m = make_model()
    rng = np.random.default_rng(0)
    f = rng.standard_normal(5)
    fd = rng.standard_normal(3)
    gold = {"a", "c"}
    # drive the heads to (clamped) target outputs through the biases
    big = 500.0
    m.a1[...] = 0.0
    m.c1[...] = 0.0
    m.a2[...] = 0.0
    m.c2[...] = [big if leaf in gold else -big for leaf in LEAVES]
    m.b1[...] = 0.0
    m.d1[...] = 0.0
    m.b2[...] = 0.0
    m.d2[...] = big
    assert P.cdp_loss(m, f, fd, gold, "a") == pytest.approx(0.0, abs=1e-9)


def test_loss_lambda_zero_is_pure_class_bce():
    m0 = make_model(lam=0.0)
    rng = np.random.default_rng(1)
    f, fd = rng.standard_normal(5), rng.standard_normal(3)
    gold = {"b"}
    scores = class_scores(m0, f)
    targets = np.array([1.0 if leaf in gold else 0.0 for leaf in LEAVES])
    assert P.cdp_loss(m0, f, fd, gold, "a") == pytest.approx(
        float(np.sum(bce(scores, targets))), rel=1e-12)


def test_loss_two_term_decomposition():
    m = make_model(lam=0.3)
    rng = np.random.default_rng(2)
    for _ in range(10):
        f, fd = rng.standard_normal(5), rng.standard_normal(3)
        gold = {"a", "d"}
        matched = "d"
        full = P.cdp_loss(m, f, fd, gold, matched)
        m_zero = make_model(lam=0.0)
        for dst, src in zip((m_zero.a1, m_zero.c1, m_zero.a2, m_zero.c2,
                             m_zero.b1, m_zero.d1, m_zero.b2, m_zero.d2),
                            (m.a1, m.c1, m.a2, m.c2, m.b1, m.d1, m.b2, m.d2)):
            dst[...] = src
        class_only = P.cdp_loss(m_zero, f, fd, gold, matched)
        # recompute the aux term independently
        pair = np.concatenate([f, fd]).reshape(1, -1)
        h = np.tanh(pair @ m.b1.T + m.d1)
        q = 1.0 / (1.0 + np.exp(-(h @ m.b2.T + m.d2)))[0, 0]
        aux = float(bce(q, 1.0))
        assert full == pytest.approx(class_only + 0.3 * aux, abs=1e-12)


def test_gradient_check():
    m = make_model(seed=3)
    rng = np.random.default_rng(3)
    f, fd = rng.standard_normal(5), rng.standard_normal(3)
    gold = {"a", "c"}
    matched = "b"
    _, grads = cdp_loss_grads(m, f, fd, gold, matched)
    params = [m.a1, m.c1, m.a2, m.c2, m.b1, m.d1, m.b2, m.d2]
    worst = 0.0
    probes = 0
    for p, g in zip(params, grads):
        for _ in range(4):
            idx = tuple(int(rng.integers(s)) for s in p.shape)
            fd_val = central_fd(lambda: P.cdp_loss(m, f, fd, gold, matched), p, idx)
            worst = max(worst, rel_err(fd_val, g[idx]))
            probes += 1
    assert probes >= 20
    assert worst < 1e-4


# -- definition pair sampling -----------------------------------------------------

def test_pairs_all_leaves_gold():
    pairs = P.sample_definition_pairs(set(LEAVES), LEAVES, seed=0)
    assert pairs == [(pairs[0][0], 1)]


def test_pairs_single_choice():
    assert P.sample_definition_pairs({"a"}, ["a", "b"], seed=5) == [("a", 1), ("b", 0)]


def test_pairs_empty_gold():
    with pytest.raises(GoldEmpty):
        P.sample_definition_pairs(set(), LEAVES, seed=0)


def test_pairs_deterministic():
    assert (P.sample_definition_pairs({"a", "b"}, LEAVES, seed=7)
            == P.sample_definition_pairs({"a", "b"}, LEAVES, seed=7))


def test_pairs_negative_never_in_gold():
    rng = np.random.default_rng(11)
    for trial in range(300):
        gold = set(rng.choice(LEAVES, size=int(rng.integers(1, 4)), replace=False))
        for label, bit in P.sample_definition_pairs(gold, LEAVES, seed=trial):
            if bit == 0:
                assert label not in gold
            else:
                assert label in gold


def test_pairs_uniform_frequency():
    gold = {"a", "b"}
    pos_counts = {"a": 0, "b": 0}
    neg_counts = {"c": 0, "d": 0}
    n = 10000
    for seed in range(n):
        pairs = P.sample_definition_pairs(gold, LEAVES, seed=seed)
        pos_counts[pairs[0][0]] += 1
        neg_counts[pairs[1][0]] += 1
    # 3 sigma for a fair coin over n draws
    bound = 3 * 0.5 * np.sqrt(n)
    assert abs(pos_counts["a"] - n / 2) < bound
    assert abs(neg_counts["c"] - n / 2) < bound


# -- training ----------------------------------------------------------------------

def test_train_missing_definition():
    t = tiny_taxonomy()
    rows = [("s", np.zeros(4), {"a"})]
    with pytest.raises(MissingDefinitionFeature):
        P.train_cdp(rows, {"a": np.zeros(3)}, P.leaf_set(t),
                    CdpConfig(epochs=1, seed=0))


def test_train_deterministic():
    t = tiny_taxonomy()
    leaves = P.leaf_set(t)
    rows = multilabel_rows(t, dim=6, per_leaf=4, seed=0)
    rng = np.random.default_rng(0)
    defs = {leaf: rng.standard_normal(4) for leaf in leaves}
    cfg = CdpConfig(trunk_hidden=8, match_hidden=8, epochs=4, seed=1)
    a = P.train_cdp(rows, defs, leaves, cfg)
    b = P.train_cdp(rows, defs, leaves, cfg)
    for x, y in zip((a.a1, a.c1, a.a2, a.c2, a.b1, a.d1, a.b2, a.d2),
                    (b.a1, b.c1, b.a2, b.c2, b.b1, b.d1, b.b2, b.d2)):
        assert np.array_equal(x, y)


def test_lambda_changes_weights():
    t = tiny_taxonomy()
    leaves = P.leaf_set(t)
    rows = multilabel_rows(t, dim=6, per_leaf=4, seed=0)
    rng = np.random.default_rng(0)
    defs = {leaf: rng.standard_normal(4) for leaf in leaves}
    a = P.train_cdp(rows, defs, leaves,
                    CdpConfig(trunk_hidden=8, match_hidden=8, epochs=4, seed=1,
                              lambda_aux=0.0))
    b = P.train_cdp(rows, defs, leaves,
                    CdpConfig(trunk_hidden=8, match_hidden=8, epochs=4, seed=1,
                              lambda_aux=0.3))
    assert not np.array_equal(a.b2, b.b2)


def test_train_fixture_subset_accuracy():
    t = tiny_taxonomy()
    leaves = P.leaf_set(t)
    rows = multilabel_rows(t, dim=8, per_leaf=15, seed=3)
    rng = np.random.default_rng(3)
    defs = {leaf: rng.standard_normal(6) for leaf in leaves}
    m = P.train_cdp(rows, defs, leaves,
                    CdpConfig(epochs=80, learning_rate=0.1, seed=0))
    preds = P.predict_cdp(m, [(sid, vec) for sid, vec, _ in rows])
    gold_map = {sid: labels for sid, _, labels in rows}
    subset_acc = np.mean([p.labels == gold_map[p.sample_id] for p in preds])
    assert subset_acc >= 0.9
    gold_sets = [P.PredictionSet.of(sid, labels) for sid, _, labels in rows]
    r = P.hierarchical_prf(t, gold_sets, preds)
    assert r.hierarchical_f1 >= 0.9


# -- prediction ----------------------------------------------------------------------

def test_predict_all_high_scores():
    m = make_model()
    m.a1[...] = 0.0
    m.c1[...] = 0.0
    m.a2[...] = 0.0
    m.c2[...] = 5.0   # every sigmoid ~ 0.993
    preds = P.predict_cdp(m, [("s", np.zeros(5))])
    assert preds[0].labels == set(LEAVES)


def test_predict_never_empty():
    m = make_model()
    m.a1[...] = 0.0
    m.c1[...] = 0.0
    m.a2[...] = 0.0
    m.c2[...] = -5.0  # every sigmoid ~ 0.007, argmax fallback must kick in
    preds = P.predict_cdp(m, [("s", np.zeros(5))])
    assert preds[0].labels == {"a"}


def test_model_roundtrip(tmp_path):
    t = tiny_taxonomy()
    leaves = P.leaf_set(t)
    rows = multilabel_rows(t, dim=5, per_leaf=3, seed=4)
    rng = np.random.default_rng(4)
    defs = {leaf: rng.standard_normal(3) for leaf in leaves}
    m = P.train_cdp(rows, defs, leaves, CdpConfig(epochs=2, seed=4))
    path = tmp_path / "model.cdpm"
    save_cdp(m, path)
    loaded = load_cdp(path)
    assert loaded.leaves == m.leaves
    assert loaded.config.lambda_aux == m.config.lambda_aux
    feats = [("q", np.ones(5))]
    assert P.predict_cdp(m, feats)[0] == P.predict_cdp(loaded, feats)[0]
