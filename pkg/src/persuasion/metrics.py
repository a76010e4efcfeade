"""Hierarchical precision/recall/F1 and macro-F1 scoring.

Hierarchical scores follow the set-augmentation scheme: both gold and
predicted label sets are extended with all their non-root ancestors, then
micro-averaged precision/recall are computed over the augmented sets.  An
exact leaf match gets full reward, an ancestor prediction a partial one
(it shares its own augmented chain with the gold chain), and a prediction
on a disjoint branch contributes nothing.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .errors import DuplicateId, EmptyGold, IdMismatch, LengthMismatch, UnknownLabel
from .taxonomy import Taxonomy, ancestors, leaf_set


@dataclass(frozen=True)
class PredictionSet:
    """One sample's predicted (or gold) label set; any DAG node is legal."""

    sample_id: str
    labels: frozenset[str]

    @staticmethod
    def of(sample_id: str, labels) -> "PredictionSet":
        return PredictionSet(sample_id=sample_id, labels=frozenset(labels))


@dataclass(frozen=True)
class MetricsReport:
    hierarchical_precision: float = 0.0
    hierarchical_recall: float = 0.0
    hierarchical_f1: float = 0.0
    per_class_f1: dict[str, float] = field(default_factory=dict)
    macro_f1: float = 0.0

    def to_dict(self) -> dict:
        return {
            "hierarchical_precision": self.hierarchical_precision,
            "hierarchical_recall": self.hierarchical_recall,
            "hierarchical_f1": self.hierarchical_f1,
            "per_class_f1": dict(self.per_class_f1),
            "macro_f1": self.macro_f1,
        }


def _f1(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def augment(t: Taxonomy, s) -> set[str]:
    """Close a label set under non-root ancestors."""
    out: set[str] = set()
    for label in s:
        if not t.has_node(label):
            raise UnknownLabel(f"unknown label {label!r}")
        if label != t.root:
            out.add(label)
        out.update(ancestors(t, label))
    return out


def _index_by_id(sets: list[PredictionSet], what: str) -> dict[str, PredictionSet]:
    by_id: dict[str, PredictionSet] = {}
    for ps in sets:
        if ps.sample_id in by_id:
            raise DuplicateId(f"duplicate {what} sample id {ps.sample_id!r}")
        by_id[ps.sample_id] = ps
    return by_id


def _align(gold: list[PredictionSet], pred: list[PredictionSet]
           ) -> list[tuple[PredictionSet, PredictionSet]]:
    g = _index_by_id(gold, "gold")
    p = _index_by_id(pred, "pred")
    if g.keys() != p.keys():
        only_g = set(g) - set(p)
        only_p = set(p) - set(g)
        raise IdMismatch(
            f"gold/pred ids differ (only gold: {sorted(only_g)}, only pred: {sorted(only_p)})",
            only_left=only_g, only_right=only_p)
    return [(g[i], p[i]) for i in g]


def hierarchical_prf(t: Taxonomy, gold: list[PredictionSet],
                     pred: list[PredictionSet]) -> MetricsReport:
    """Micro-averaged hierarchical precision/recall/F1 over augmented sets.

    Empty prediction sets are legal and contribute zero to both the
    intersection and the predicted total for their sample.
    """
    if not gold or any(not ps.labels for ps in gold):
        raise EmptyGold("every gold sample must carry at least one label")
    pairs = _align(gold, pred)
    inter = pred_total = gold_total = 0
    for g, p in pairs:
        aug_g = augment(t, g.labels)
        aug_p = augment(t, p.labels)
        inter += len(aug_g & aug_p)
        pred_total += len(aug_p)
        gold_total += len(aug_g)
    hp = inter / pred_total if pred_total else 0.0
    hr = inter / gold_total if gold_total else 0.0
    return MetricsReport(
        hierarchical_precision=hp,
        hierarchical_recall=hr,
        hierarchical_f1=_f1(hp, hr),
    )


def per_class_f1(gold: list[PredictionSet], pred: list[PredictionSet],
                 classes: list[str]) -> dict[str, float]:
    """Binary F1 per class over sample membership."""
    pairs = _align(gold, pred)
    out: dict[str, float] = {}
    for cls in classes:
        tp = fp = fn = 0
        for g, p in pairs:
            in_g, in_p = cls in g.labels, cls in p.labels
            tp += in_g and in_p
            fp += in_p and not in_g
            fn += in_g and not in_p
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        out[cls] = _f1(prec, rec)
    return out


def macro_f1(gold: list[int], pred: list[int]) -> MetricsReport:
    """Unweighted mean of per-class F1 over the binary classes {0, 1}.

    A class absent from both gold and pred contributes F1 = 0, keeping the
    score honest on degenerate inputs.
    """
    if len(gold) != len(pred):
        raise LengthMismatch(f"gold has {len(gold)} rows, pred has {len(pred)}")
    for v in list(gold) + list(pred):
        if v not in (0, 1):
            raise ValueError(f"binary labels must be 0 or 1, got {v!r}")
    scores: dict[str, float] = {}
    for cls in (0, 1):
        tp = sum(1 for g, p in zip(gold, pred) if g == cls and p == cls)
        fp = sum(1 for g, p in zip(gold, pred) if g != cls and p == cls)
        fn = sum(1 for g, p in zip(gold, pred) if g == cls and p != cls)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        scores[str(cls)] = _f1(prec, rec)
    mf1 = (scores["0"] + scores["1"]) / 2.0
    return MetricsReport(per_class_f1=scores, macro_f1=mf1)


def hierarchical_report(t: Taxonomy, gold: list[PredictionSet],
                        pred: list[PredictionSet]) -> MetricsReport:
    """hierarchical_prf plus per-leaf-class F1 in one report."""
    base = hierarchical_prf(t, gold, pred)
    per_cls = per_class_f1(gold, pred, leaf_set(t))
    return MetricsReport(
        hierarchical_precision=base.hierarchical_precision,
        hierarchical_recall=base.hierarchical_recall,
        hierarchical_f1=base.hierarchical_f1,
        per_class_f1=per_cls,
        macro_f1=sum(per_cls.values()) / len(per_cls) if per_cls else 0.0,
    )
