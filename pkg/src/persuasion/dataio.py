"""Dataset, prediction and feature-file I/O plus text normalization.

Datasets and predictions travel as JSONL; features travel in the compact
binary HMLF format:

    magic "HMLF" | u16 version=1 | u32 dim | u64 count
    count x (u16 id byte-length | UTF-8 id bytes)
    count x dim little-endian f32 values, row-major

The format is language-neutral on purpose: the feature extractor that
produces these files is a separate program.
"""
from __future__ import annotations

import json
import struct
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateId,
    IdMismatch,
    MalformedHeader,
    NonFiniteInput,
    UnknownLabel,
)
from .metrics import PredictionSet
from .taxonomy import Taxonomy, leaf_set

HMLF_MAGIC = b"HMLF"
HMLF_VERSION = 1


@dataclass
class Sample:
    sample_id: str
    text: str
    labels: set[str] = field(default_factory=set)
    image_ref: str | None = None


@dataclass
class FeatureFile:
    """In-memory HMLF contents: parallel id list and row matrix (f32)."""

    dim: int
    ids: list[str]
    matrix: np.ndarray      # shape (count, dim), float32

    def __post_init__(self) -> None:
        self._index = {sid: i for i, sid in enumerate(self.ids)}
        if len(self._index) != len(self.ids):
            dupes = sorted({s for s in self.ids if self.ids.count(s) > 1})
            raise DuplicateId(f"duplicate feature ids: {dupes}")

    @property
    def count(self) -> int:
        return len(self.ids)

    def vector(self, sample_id: str) -> np.ndarray:
        if sample_id not in self._index:
            raise IdMismatch(f"id {sample_id!r} not in feature file",
                             only_left={sample_id})
        return self.matrix[self._index[sample_id]]

    def records(self) -> list[tuple[str, np.ndarray]]:
        return [(sid, self.matrix[i]) for i, sid in enumerate(self.ids)]

    def records_for(self, ids: list[str]) -> list[tuple[str, np.ndarray]]:
        missing = sorted(set(ids) - set(self._index))
        if missing:
            raise IdMismatch(f"feature file missing ids: {missing}",
                             only_left=set(missing))
        return [(sid, self.vector(sid)) for sid in ids]


def normalize_text(s: str) -> str:
    """Canonical preprocessing rule chain.

    Newlines and carriage returns become spaces; commas and decimal digits
    are removed; any remaining character that is neither alphanumeric nor a
    space is removed; runs of spaces collapse; the result is trimmed and
    lowercased.
    """
    s = s.replace("\r", " ").replace("\n", " ")
    s = s.replace(",", "")
    s = "".join(ch for ch in s if not ch.isdecimal())
    s = "".join(ch for ch in s if ch.isalnum() or ch == " ")
    s = " ".join(part for part in s.split(" ") if part)
    return s.lower()


# -- dataset JSONL ------------------------------------------------------------

def read_dataset(path: str | Path, taxonomy: Taxonomy | None = None) -> list[Sample]:
    """Parse a dataset file; labels are validated against the taxonomy leaves
    when one is provided."""
    leaves = set(leaf_set(taxonomy)) if taxonomy is not None else None
    samples: list[Sample] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MalformedHeader(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            sid = str(row["id"])
            if sid in seen:
                raise DuplicateId(f"{path}:{line_no}: duplicate id {sid!r}")
            seen.add(sid)
            labels = {unicodedata.normalize("NFC", l) for l in row.get("labels") or []}
            if leaves is not None:
                unknown = labels - leaves
                if unknown:
                    raise UnknownLabel(
                        f"{path}:{line_no}: labels not in taxonomy leaves: {sorted(unknown)}")
            samples.append(Sample(sample_id=sid, text=row.get("text", ""),
                                  labels=labels, image_ref=row.get("image_ref")))
    return samples


def write_dataset(samples: list[Sample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in samples:
            row = {"id": s.sample_id, "text": s.text, "labels": sorted(s.labels)}
            if s.image_ref is not None:
                row["image_ref"] = s.image_ref
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


# -- prediction JSONL ---------------------------------------------------------

def read_predictions(path: str | Path) -> list[PredictionSet]:
    out: list[PredictionSet] = []
    seen: set[str] = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            sid = str(row["id"])
            if sid in seen:
                raise DuplicateId(f"{path}: duplicate id {sid!r}")
            seen.add(sid)
            out.append(PredictionSet.of(
                sid, (unicodedata.normalize("NFC", l) for l in row.get("labels") or [])))
    return out


def write_predictions(preds: list[PredictionSet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ps in preds:
            fh.write(json.dumps({"id": ps.sample_id, "labels": sorted(ps.labels)},
                                ensure_ascii=False) + "\n")


def read_binary_labels(path: str | Path) -> dict[str, int]:
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            sid = str(row["id"])
            if sid in out:
                raise DuplicateId(f"{path}: duplicate id {sid!r}")
            label = int(row["label"])
            if label not in (0, 1):
                raise MalformedHeader(f"{path}: binary label must be 0 or 1, got {label}")
            out[sid] = label
    return out


def write_binary_predictions(rows: list[tuple[str, int, float]], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for sid, bit, prob in rows:
            fh.write(json.dumps({"id": sid, "label": bit, "prob": prob}) + "\n")


# -- HMLF feature files -------------------------------------------------------

def write_features(ff: FeatureFile, path: str | Path) -> None:
    matrix = np.ascontiguousarray(ff.matrix, dtype="<f4")
    if matrix.shape != (ff.count, ff.dim):
        raise MalformedHeader(f"matrix shape {matrix.shape} does not match "
                              f"count={ff.count}, dim={ff.dim}")
    with open(path, "wb") as fh:
        fh.write(HMLF_MAGIC)
        fh.write(struct.pack("<HIQ", HMLF_VERSION, ff.dim, ff.count))
        for sid in ff.ids:
            raw = sid.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
        fh.write(matrix.tobytes())


def read_features(path: str | Path) -> FeatureFile:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != HMLF_MAGIC:
            raise MalformedHeader(f"{path}: expected magic {HMLF_MAGIC!r}, got {magic!r}")
        header = fh.read(14)
        if len(header) != 14:
            raise MalformedHeader(f"{path}: truncated header")
        version, dim, count = struct.unpack("<HIQ", header)
        if version != HMLF_VERSION:
            raise MalformedHeader(f"{path}: unsupported version {version}")
        ids: list[str] = []
        seen: set[str] = set()
        for _ in range(count):
            raw_len = fh.read(2)
            if len(raw_len) != 2:
                raise MalformedHeader(f"{path}: truncated id table")
            (n,) = struct.unpack("<H", raw_len)
            sid = fh.read(n).decode("utf-8")
            if sid in seen:
                raise DuplicateId(f"{path}: duplicate feature id {sid!r}")
            seen.add(sid)
            ids.append(sid)
        raw = fh.read(4 * dim * count)
        if len(raw) != 4 * dim * count:
            raise MalformedHeader(f"{path}: truncated value matrix")
        if fh.read(1):
            raise MalformedHeader(f"{path}: trailing bytes after value matrix")
    matrix = np.frombuffer(raw, dtype="<f4").reshape(count, dim).copy()
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteInput(f"{path}: non-finite feature values")
    return FeatureFile(dim=dim, ids=ids, matrix=matrix)


def features_from_records(records: list[tuple[str, np.ndarray]], dim: int | None = None
                          ) -> FeatureFile:
    if not records:
        return FeatureFile(dim=dim or 0, ids=[], matrix=np.zeros((0, dim or 0), dtype=np.float32))
    matrix = np.asarray([vec for _, vec in records], dtype=np.float32)
    return FeatureFile(dim=matrix.shape[1], ids=[sid for sid, _ in records], matrix=matrix)


def concat_features(a: FeatureFile, b: FeatureFile) -> FeatureFile:
    """Column-concatenate two feature files aligned by id (a's order wins)."""
    if set(a.ids) != set(b.ids):
        only_a = sorted(set(a.ids) - set(b.ids))
        only_b = sorted(set(b.ids) - set(a.ids))
        raise IdMismatch(f"feature files disagree on ids (first only: {only_a}, "
                         f"second only: {only_b})",
                         only_left=set(only_a), only_right=set(only_b))
    rows = [np.concatenate([a.vector(sid), b.vector(sid)]) for sid in a.ids]
    return FeatureFile(dim=a.dim + b.dim, ids=list(a.ids),
                       matrix=np.asarray(rows, dtype=np.float32))


# -- dataset statistics -------------------------------------------------------

def stats(dataset: list[Sample], taxonomy: Taxonomy) -> dict[str, int]:
    """Label frequency over the dataset, keyed and ordered by leaf index."""
    counts = {leaf: 0 for leaf in leaf_set(taxonomy)}
    for s in dataset:
        for label in s.labels:
            if label not in counts:
                raise UnknownLabel(f"sample {s.sample_id!r} carries non-leaf label {label!r}")
            counts[label] += 1
    return counts
