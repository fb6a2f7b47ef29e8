"""Referring segmentation metrics: IoU, oIoU, mIoU and Pr@X"""

from collections.abc import Sequence

import numpy as np
import torch

from dual_view_seg.errors import GridShapeError, MetricsError
from dual_view_seg.models import EvalRecord

MaskLike = np.ndarray | torch.Tensor


def _as_bool(mask: MaskLike) -> np.ndarray:
    if isinstance(mask, torch.Tensor):
        mask = mask.detach().cpu().numpy()
    return np.asarray(mask) != 0


def iou(
    pred_mask: MaskLike,
    gt_mask: MaskLike,
    sample_id: str = "",
    category: str | None = None,
    size_class: str | None = None,
) -> EvalRecord:
    """Exact pixel counts of one prediction; both masks empty counts as 1.0"""
    pred, gt = _as_bool(pred_mask), _as_bool(gt_mask)
    if pred.shape != gt.shape:
        raise GridShapeError(f"prediction {pred.shape} != target {gt.shape}")
    intersection = int(np.logical_and(pred, gt).sum())
    union = int(np.logical_or(pred, gt).sum())
    return EvalRecord(
        sample_id=sample_id,
        intersection=intersection,
        union=union,
        iou=intersection / union if union else 1.0,
        category=category or None,
        size_class=size_class or None,
    )


def _require(records: Sequence[EvalRecord]) -> None:
    if not records:
        raise MetricsError("no evaluation records")


def oiou(records: Sequence[EvalRecord]) -> float:
    """Total intersection over total union"""
    _require(records)
    union = sum(r.union for r in records)
    if union == 0:
        return 1.0
    return sum(r.intersection for r in records) / union


def miou(records: Sequence[EvalRecord]) -> float:
    """Mean per-sample IoU"""
    _require(records)
    return sum(r.iou for r in records) / len(records)


def precision_at(records: Sequence[EvalRecord], threshold: float) -> float:
    """Percentage of samples whose IoU is strictly above the threshold"""
    _require(records)
    hits = sum(1 for r in records if r.iou > threshold)
    return 100.0 * hits / len(records)
