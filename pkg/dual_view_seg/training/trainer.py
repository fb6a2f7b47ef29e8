"""Training loop"""

from collections.abc import Callable
from logging import getLogger
from math import ceil
from pathlib import Path
from time import perf_counter
from typing import NamedTuple

import torch
from pandas import DataFrame, read_csv
from torch.optim import AdamW
from torch.utils.data import Dataset

from dual_view_seg.config.seeding import seed_all
from dual_view_seg.config.settings import ModelConfig, TrainConfig
from dual_view_seg.errors import CheckpointError, TrainingDivergedError
from dual_view_seg.models import AblationSwitches, EvalRecord, ViewBundle
from dual_view_seg.network.decoder import predict_mask
from dual_view_seg.network.segmenter import DualViewSegmenter
from dual_view_seg.training.checkpoint import (
    CheckpointHeader,
    load_checkpoint,
    save_checkpoint,
)
from dual_view_seg.training.dataset import Batch, make_loader
from dual_view_seg.training.losses import LossTerms, total_loss
from dual_view_seg.training.metrics import iou, miou
from dual_view_seg.training.schedule import poly_lr, set_lr

logger = getLogger(__name__)

LOSS_LOG_COLUMNS = ["step", "lr", "total", "dice", "bce", "wall_ms"]
LOSS_LOG_NAME = "loss_log.csv"
BEST_CHECKPOINT_NAME = "best.npz"

StepCallback = Callable[[int, LossTerms], None]


class TrainResult(NamedTuple):
    steps: int
    final_loss: float
    best_miou: float | None
    last_checkpoint: Path | None
    best_checkpoint: Path | None
    log_path: Path


def checkpoint_name(epoch: int) -> str:
    return f"epoch_{epoch:03d}.npz"


def run_model(model: DualViewSegmenter, batch: Batch) -> torch.Tensor:
    """Foreground-background probabilities (B, 2, nH, nW) of a batch"""
    return model(batch.remote, batch.close, batch.ids, batch.attn_mask).pred


def evaluate_model(
    model: DualViewSegmenter,
    dataset: Dataset[ViewBundle],
    batch_size: int = 8,
    threshold: float = 0.5,
) -> list[EvalRecord]:
    """Per-sample IoU records of thresholded predictions, in dataset order"""
    was_training = model.training
    model.eval()
    records: list[EvalRecord] = []
    with torch.no_grad():
        for batch in make_loader(dataset, batch_size):
            masks = predict_mask(run_model(model, batch), threshold)
            for i, sample_id in enumerate(batch.sample_ids):
                records.append(
                    iou(
                        masks[i],
                        batch.mask[i],
                        sample_id,
                        batch.categories[i],
                        batch.size_classes[i],
                    )
                )
    model.train(was_training)
    return records


def load_model(path: Path) -> tuple[DualViewSegmenter, CheckpointHeader]:
    """Rebuild the model stored in a checkpoint, in eval mode"""
    checkpoint = load_checkpoint(path)
    header = checkpoint.header
    model = DualViewSegmenter(header.model_cfg, header.vocab_size, header.switches)
    checkpoint.restore_model(model)
    model.eval()
    return model, header


class Trainer:
    """AdamW with polynomial decay over Dice + BCE

    Writes the loss log and one checkpoint per epoch into run_dir, plus
    best.npz whenever validation mIoU improves.
    """

    def __init__(
        self,
        model_cfg: ModelConfig,
        train_cfg: TrainConfig,
        vocab_size: int,
        train_set: Dataset[ViewBundle],
        run_dir: Path,
        val_set: Dataset[ViewBundle] | None = None,
        switches: AblationSwitches | None = None,
    ):
        self.model_cfg = model_cfg
        self.train_cfg = train_cfg
        self.switches = switches or AblationSwitches()
        self.vocab_size = vocab_size
        self.train_set = train_set
        self.val_set = val_set
        self.run_dir = run_dir
        self.seed = model_cfg.seed

        seed_all(self.seed)
        self.model = DualViewSegmenter(model_cfg, vocab_size, self.switches)
        self.optimizer = AdamW(
            self.model.parameters(),
            lr=train_cfg.lr,
            weight_decay=train_cfg.weight_decay,
        )
        self.step = 0
        self.epoch = 0
        self.best_miou: float | None = None
        self.rows: list[dict[str, float]] = []

    @property
    def steps_per_epoch(self) -> int:
        size = len(self.train_set)  # type: ignore[arg-type]
        return ceil(size / self.train_cfg.batch_size)

    @property
    def total_steps(self) -> int:
        total = self.train_cfg.epochs * self.steps_per_epoch
        if self.train_cfg.max_steps is not None:
            total = min(total, self.train_cfg.max_steps)
        return total

    @property
    def log_path(self) -> Path:
        return self.run_dir / LOSS_LOG_NAME

    def header(self) -> CheckpointHeader:
        return CheckpointHeader(
            model_cfg=self.model_cfg,
            train_cfg=self.train_cfg,
            switches=self.switches,
            vocab_size=self.vocab_size,
            step=self.step,
            epoch=self.epoch,
            seed=self.seed,
            best_miou=self.best_miou,
        )

    def resume(self, path: Path) -> None:
        """Restore model, optimizer and counters; keep the log up to that step"""
        checkpoint = load_checkpoint(path)
        if checkpoint.header.model_cfg != self.model_cfg:
            raise CheckpointError(f"{path}: model configuration differs from the run")
        checkpoint.restore_model(self.model)
        checkpoint.restore_optimizer(self.optimizer)
        self.step = checkpoint.header.step
        self.epoch = checkpoint.header.epoch
        self.best_miou = checkpoint.header.best_miou
        if self.log_path.exists():
            logged = read_csv(self.log_path)
            self.rows = logged[logged["step"] < self.step].to_dict("records")
        logger.info(f"Resumed from {path} at step {self.step}, epoch {self.epoch}")

    def write_log(self) -> None:
        self.run_dir.mkdir(parents=True, exist_ok=True)
        frame = DataFrame(self.rows, columns=LOSS_LOG_COLUMNS)
        frame.to_csv(self.log_path, index=False)

    def _diverged(self) -> TrainingDivergedError:
        dump = self.run_dir / f"diverged_step_{self.step:06d}.npz"
        self.write_log()
        save_checkpoint(dump, self.model, self.header(), self.optimizer)
        return TrainingDivergedError(self.step, dump)

    def train_step(self, batch: Batch) -> LossTerms:
        lr = poly_lr(
            self.train_cfg.lr, self.step, self.total_steps, self.train_cfg.poly_power
        )
        set_lr(self.optimizer, lr)
        started = perf_counter()

        pred = run_model(self.model, batch)
        terms = total_loss(
            pred, batch.mask, self.train_cfg.dice_weight, self.train_cfg.bce_weight
        )
        if not torch.isfinite(terms.total):
            raise self._diverged()
        self.optimizer.zero_grad()
        terms.total.backward()
        self.optimizer.step()

        self.rows.append(
            {
                "step": self.step,
                "lr": lr,
                "total": terms.total.item(),
                "dice": terms.dice.item(),
                "bce": terms.bce.item(),
                "wall_ms": (perf_counter() - started) * 1000.0,
            }
        )
        self.step += 1
        return terms

    def validate(self) -> float | None:
        if self.val_set is None or len(self.val_set) == 0:  # type: ignore[arg-type]
            return None
        records = evaluate_model(
            self.model,
            self.val_set,
            self.train_cfg.batch_size,
            self.train_cfg.threshold,
        )
        return miou(records)

    def train(
        self, resume: Path | None = None, on_step: StepCallback | None = None
    ) -> TrainResult:
        if resume is not None:
            self.resume(resume)
        self.model.train()
        last_checkpoint: Path | None = None
        best_checkpoint: Path | None = None
        if (self.run_dir / BEST_CHECKPOINT_NAME).exists() and resume is not None:
            best_checkpoint = self.run_dir / BEST_CHECKPOINT_NAME
        final_loss = float("nan")

        while self.epoch < self.train_cfg.epochs and self.step < self.total_steps:
            loader = make_loader(
                self.train_set,
                self.train_cfg.batch_size,
                shuffle=True,
                seed=self.seed + self.epoch,
                num_workers=self.train_cfg.num_workers,
            )
            for batch in loader:
                if self.step >= self.total_steps:
                    break
                terms = self.train_step(batch)
                final_loss = terms.total.item()
                if on_step is not None:
                    on_step(self.step, terms)
            self.epoch += 1

            val_miou = self.validate()
            improved = val_miou is not None and (
                self.best_miou is None or val_miou > self.best_miou
            )
            if improved:
                self.best_miou = val_miou
            last_checkpoint = self.run_dir / checkpoint_name(self.epoch)
            save_checkpoint(last_checkpoint, self.model, self.header(), self.optimizer)
            if improved:
                best_checkpoint = self.run_dir / BEST_CHECKPOINT_NAME
                save_checkpoint(
                    best_checkpoint, self.model, self.header(), self.optimizer
                )
            self.write_log()
            logger.info(
                f"Epoch {self.epoch}: step {self.step}, loss {final_loss:.4f}"
                + (f", val mIoU {val_miou:.4f}" if val_miou is not None else "")
            )

        self.write_log()
        return TrainResult(
            steps=self.step,
            final_loss=final_loss,
            best_miou=self.best_miou,
            last_checkpoint=last_checkpoint,
            best_checkpoint=best_checkpoint,
            log_path=self.log_path,
        )
