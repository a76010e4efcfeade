import json
from pathlib import Path

import numpy as np
import pytest

import persuasion as P
from persuasion.dataio import (
    FeatureFile,
    features_from_records,
    read_binary_labels,
    write_binary_predictions,
)
from persuasion.errors import (
    DuplicateId,
    IdMismatch,
    MalformedHeader,
    NonFiniteInput,
    UnknownLabel,
)

CASES = json.loads((Path(__file__).parent / "data" / "normalize_cases.json")
                   .read_text(encoding="utf-8"))


# -- normalize_text -------------------------------------------------------------

@pytest.mark.parametrize("raw,expected", CASES)
def test_normalize_shared_vectors(raw, expected):
    assert P.normalize_text(raw) == expected


def test_normalize_idempotent():
    for raw, _ in CASES:
        once = P.normalize_text(raw)
        assert P.normalize_text(once) == once


# -- dataset JSONL ----------------------------------------------------------------

def test_read_empty_dataset(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("", encoding="utf-8")
    assert P.read_dataset(path) == []


def test_dataset_roundtrip(tmp_path, tax1):
    rng = np.random.default_rng(0)
    leaves = P.leaf_set(tax1)
    samples = [
        P.Sample(sample_id=f"s{i}", text=f"text {i}",
                 labels=set(rng.choice(leaves, size=2, replace=False)),
                 image_ref=f"img{i}.png" if i % 2 == 0 else None)
        for i in range(20)
    ]
    path = tmp_path / "d.jsonl"
    P.write_dataset(samples, path)
    loaded = P.read_dataset(path, tax1)
    assert loaded == samples


def test_dataset_duplicate_id(tmp_path):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "a", "text": "x"}\n{"id": "a", "text": "y"}\n')
    with pytest.raises(DuplicateId):
        P.read_dataset(path)


def test_dataset_unknown_label(tmp_path, tax1):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "a", "text": "x", "labels": ["NotATechnique"]}\n')
    with pytest.raises(UnknownLabel):
        P.read_dataset(path, tax1)
    # without a taxonomy the same file parses
    assert len(P.read_dataset(path)) == 1


def test_dataset_internal_label_rejected(tmp_path, tax1):
    path = tmp_path / "d.jsonl"
    path.write_text('{"id": "a", "text": "x", "labels": ["Ethos"]}\n')
    with pytest.raises(UnknownLabel):
        P.read_dataset(path, tax1)


# -- feature files ------------------------------------------------------------------

def test_feature_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    for trial in range(10):
        count = int(rng.integers(0, 30))
        dim = int(rng.integers(1, 40))
        ids = [f"id-{trial}-{i}" for i in range(count)]
        matrix = rng.standard_normal((count, dim)).astype(np.float32)
        ff = FeatureFile(dim=dim, ids=ids, matrix=matrix)
        path = tmp_path / f"f{trial}.hmlf"
        P.write_features(ff, path)
        loaded = P.read_features(path)
        assert loaded.dim == dim
        assert loaded.ids == ids
        assert np.array_equal(loaded.matrix, matrix)


def test_feature_roundtrip_bytes_stable(tmp_path):
    rng = np.random.default_rng(2)
    ff = features_from_records([(f"s{i}", rng.standard_normal(7)) for i in range(5)])
    p1, p2 = tmp_path / "a.hmlf", tmp_path / "b.hmlf"
    P.write_features(ff, p1)
    P.write_features(P.read_features(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_feature_empty_file(tmp_path):
    ff = features_from_records([], dim=0)
    path = tmp_path / "empty.hmlf"
    P.write_features(ff, path)
    loaded = P.read_features(path)
    assert loaded.count == 0


def test_feature_unicode_ids(tmp_path):
    ff = features_from_records([("Thought-terminating cliché", np.zeros(3)),
                                ("名前", np.ones(3))])
    path = tmp_path / "u.hmlf"
    P.write_features(ff, path)
    assert P.read_features(path).ids == ["Thought-terminating cliché", "名前"]


def test_feature_bad_magic(tmp_path):
    path = tmp_path / "bad.hmlf"
    path.write_bytes(b"NOPE" + b"\x00" * 20)
    with pytest.raises(MalformedHeader):
        P.read_features(path)


def test_feature_truncated(tmp_path):
    rng = np.random.default_rng(3)
    ff = features_from_records([(f"s{i}", rng.standard_normal(4)) for i in range(3)])
    path = tmp_path / "t.hmlf"
    P.write_features(ff, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-5])
    with pytest.raises(MalformedHeader):
        P.read_features(path)


def test_feature_duplicate_id_rejected_on_construction():
    with pytest.raises(DuplicateId):
        FeatureFile(dim=2, ids=["a", "a"], matrix=np.zeros((2, 2), dtype=np.float32))


def test_feature_duplicate_id_rejected_on_read(tmp_path):
    import struct
    # handcraft a file whose id table repeats "a"
    raw = b"HMLF" + struct.pack("<HIQ", 1, 2, 2)
    raw += struct.pack("<H", 1) + b"a"
    raw += struct.pack("<H", 1) + b"a"
    raw += np.zeros((2, 2), dtype="<f4").tobytes()
    path = tmp_path / "dup.hmlf"
    path.write_bytes(raw)
    with pytest.raises(DuplicateId):
        P.read_features(path)


def test_feature_nonfinite(tmp_path):
    matrix = np.array([[np.inf, 0.0]], dtype=np.float32)
    ff = FeatureFile(dim=2, ids=["a"], matrix=matrix)
    path = tmp_path / "inf.hmlf"
    P.write_features(ff, path)
    with pytest.raises(NonFiniteInput):
        P.read_features(path)


def test_concat_features():
    a = features_from_records([("x", np.array([1.0, 2.0])), ("y", np.array([3.0, 4.0]))])
    b = features_from_records([("y", np.array([5.0])), ("x", np.array([6.0]))])
    out = P.concat_features(a, b)
    assert out.dim == 3
    assert np.allclose(out.vector("x"), [1.0, 2.0, 6.0])
    assert np.allclose(out.vector("y"), [3.0, 4.0, 5.0])


def test_concat_features_mismatch():
    a = features_from_records([("x", np.zeros(2))])
    b = features_from_records([("z", np.zeros(2))])
    with pytest.raises(IdMismatch):
        P.concat_features(a, b)


# -- predictions ---------------------------------------------------------------------

def test_predictions_roundtrip(tmp_path):
    preds = [P.PredictionSet.of("a", {"X", "Y"}), P.PredictionSet.of("b", set())]
    path = tmp_path / "p.jsonl"
    P.write_predictions(preds, path)
    assert P.read_predictions(path) == preds


def test_binary_predictions_roundtrip(tmp_path):
    rows = [("a", 1, 0.75), ("b", 0, 0.25)]
    path = tmp_path / "b.jsonl"
    write_binary_predictions(rows, path)
    labels = read_binary_labels(path)
    assert labels == {"a": 1, "b": 0}


def test_binary_labels_validation(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"id": "a", "label": 2}\n')
    with pytest.raises(MalformedHeader):
        read_binary_labels(path)


# -- stats -----------------------------------------------------------------------------

def test_stats_empty(tax1):
    out = P.stats([], tax1)
    assert set(out) == set(P.leaf_set(tax1))
    assert all(v == 0 for v in out.values())
    assert list(out) == P.leaf_set(tax1)  # leaf-index order


def test_stats_single(tax1):
    out = P.stats([P.Sample(sample_id="a", text="", labels={"Smears"})], tax1)
    assert out["Smears"] == 1
    assert sum(out.values()) == 1


def test_stats_counting_oracle(tax1):
    rng = np.random.default_rng(5)
    leaves = P.leaf_set(tax1)
    samples = [P.Sample(sample_id=f"s{i}", text="",
                        labels=set(rng.choice(leaves, size=int(rng.integers(1, 4)),
                                              replace=False)))
               for i in range(50)]
    out = P.stats(samples, tax1)
    for leaf in leaves:
        assert out[leaf] == sum(1 for s in samples if leaf in s.labels)
