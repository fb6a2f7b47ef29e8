"""Dice + BCE segmentation loss"""

from typing import NamedTuple

import torch

from dual_view_seg.config.constants import BCE_CLAMP, DICE_EPSILON
from dual_view_seg.errors import GridShapeError


class LossTerms(NamedTuple):
    total: torch.Tensor
    dice: torch.Tensor
    bce: torch.Tensor


def _check_shapes(pred_fg: torch.Tensor, gt: torch.Tensor) -> None:
    if pred_fg.shape != gt.shape:
        raise GridShapeError(
            f"prediction {tuple(pred_fg.shape)} != target {tuple(gt.shape)}"
        )


def dice_loss(
    pred_fg: torch.Tensor, gt: torch.Tensor, epsilon: float = DICE_EPSILON
) -> torch.Tensor:
    """1 - (2 * sum(p * g) + eps) / (sum(p) + sum(g) + eps)

    Inputs with a leading batch axis (ndim > 2) are scored per sample and
    averaged.
    """
    _check_shapes(pred_fg, gt)
    gt = gt.to(pred_fg.dtype)
    if pred_fg.ndim > 2:
        pred_fg, gt = pred_fg.flatten(1), gt.flatten(1)
        dims: tuple[int, ...] = (1,)
    else:
        dims = tuple(range(pred_fg.ndim))
    overlap = (pred_fg * gt).sum(dims)
    total = pred_fg.sum(dims) + gt.sum(dims)
    return (1.0 - (2.0 * overlap + epsilon) / (total + epsilon)).mean()


def bce_loss(
    pred_fg: torch.Tensor, gt: torch.Tensor, clamp: float = BCE_CLAMP
) -> torch.Tensor:
    """Mean binary cross-entropy over pixels with clamped probabilities"""
    _check_shapes(pred_fg, gt)
    gt = gt.to(pred_fg.dtype)
    p = pred_fg.clamp(clamp, 1.0 - clamp)
    return -(gt * torch.log(p) + (1.0 - gt) * torch.log1p(-p)).mean()


def total_loss(
    pred: torch.Tensor,
    gt: torch.Tensor,
    dice_weight: float = 0.9,
    bce_weight: float = 0.1,
) -> LossTerms:
    """Weighted Dice + BCE on the foreground channel of a (B, 2, H, W) map"""
    pred_fg = pred[:, 1] if pred.ndim == 4 else pred
    dice = dice_loss(pred_fg, gt)
    bce = bce_loss(pred_fg, gt)
    return LossTerms(dice_weight * dice + bce_weight * bce, dice, bce)
