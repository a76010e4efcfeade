"""Prediction-set ensembling by per-sample label union.

Union was chosen over stacking: with few samples a meta-learner does not
generalize, while the union can only raise hierarchical recall.
"""
from __future__ import annotations

from .errors import DuplicateId, IdMismatch
from .metrics import PredictionSet


def union_ensemble(preds: list[list[PredictionSet]]) -> list[PredictionSet]:
    """Per sample id, the union of the label sets across all inputs.

    All inputs must cover exactly the same ids; output follows the first
    input's sample order.
    """
    if not preds:
        return []
    maps: list[dict[str, PredictionSet]] = []
    for component in preds:
        by_id: dict[str, PredictionSet] = {}
        for ps in component:
            if ps.sample_id in by_id:
                raise DuplicateId(f"duplicate sample id {ps.sample_id!r}")
            by_id[ps.sample_id] = ps
        maps.append(by_id)
    base_ids = set(maps[0])
    for other in maps[1:]:
        if set(other) != base_ids:
            only_first = base_ids - set(other)
            only_other = set(other) - base_ids
            raise IdMismatch(
                f"prediction files disagree on ids (sym. diff.: "
                f"{sorted(only_first | only_other)})",
                only_left=only_first, only_right=only_other)
    out: list[PredictionSet] = []
    for ps in preds[0]:
        labels: set[str] = set()
        for by_id in maps:
            labels |= by_id[ps.sample_id].labels
        out.append(PredictionSet.of(ps.sample_id, labels))
    return out
