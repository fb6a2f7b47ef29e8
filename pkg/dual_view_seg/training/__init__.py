"""Losses, metrics, data loading, checkpoints and the training loop"""

from dual_view_seg.training.checkpoint import (
    Checkpoint,
    CheckpointHeader,
    load_checkpoint,
    save_checkpoint,
)
from dual_view_seg.training.dataset import (
    Batch,
    ManifestDataset,
    SyntheticDataset,
    collate_views,
    make_loader,
    scene_spec_for,
    split_seeds,
)
from dual_view_seg.training.losses import LossTerms, bce_loss, dice_loss, total_loss
from dual_view_seg.training.metrics import iou, miou, oiou, precision_at
from dual_view_seg.training.report import MetricsReport, emit_report
from dual_view_seg.training.schedule import poly_lr
from dual_view_seg.training.trainer import (
    Trainer,
    TrainResult,
    evaluate_model,
    load_model,
)

__all__ = [
    "Batch",
    "Checkpoint",
    "CheckpointHeader",
    "LossTerms",
    "ManifestDataset",
    "MetricsReport",
    "SyntheticDataset",
    "TrainResult",
    "Trainer",
    "bce_loss",
    "collate_views",
    "dice_loss",
    "emit_report",
    "evaluate_model",
    "iou",
    "load_checkpoint",
    "load_model",
    "make_loader",
    "miou",
    "oiou",
    "poly_lr",
    "precision_at",
    "save_checkpoint",
    "scene_spec_for",
    "split_seeds",
    "total_loss",
]
