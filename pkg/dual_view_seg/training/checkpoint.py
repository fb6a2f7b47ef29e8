"""Checkpoint archive

A checkpoint is an uncompressed .npz file of flat named arrays:

- ``__header__``: JSON text with the format tag, configs, switches, step,
  epoch, seed, vocabulary size, best validation mIoU and the optimizer's
  param groups
- ``model/<name>``: every entry of the model state dict
- ``optim/<index>/<key>``: per-parameter optimizer state

Nothing is pickled, so archives load with ``allow_pickle=False``.
"""

import json
from logging import getLogger
from pathlib import Path
from typing import Any

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, ValidationError
from torch import nn
from torch.optim import Optimizer

from dual_view_seg.config.settings import ModelConfig, TrainConfig
from dual_view_seg.errors import CheckpointError
from dual_view_seg.models.switches import AblationSwitches

logger = getLogger(__name__)

FORMAT_TAG = "dual-view-seg/1"
HEADER_KEY = "__header__"
MODEL_PREFIX = "model/"
OPTIM_PREFIX = "optim/"


class CheckpointHeader(BaseModel):
    """Everything in a checkpoint besides the arrays"""

    model_config = ConfigDict(protected_namespaces=())

    format: str = FORMAT_TAG
    model_cfg: ModelConfig
    train_cfg: TrainConfig | None = None
    switches: AblationSwitches = AblationSwitches()
    vocab_size: int
    step: int = 0
    epoch: int = 0
    seed: int = 0
    best_miou: float | None = None
    param_groups: list[dict[str, Any]] = []


class Checkpoint(BaseModel):
    model_config = ConfigDict(arbitrary_types_allowed=True, protected_namespaces=())

    header: CheckpointHeader
    model_state: dict[str, np.ndarray]
    optimizer_state: dict[int, dict[str, np.ndarray]] = {}

    def model_state_dict(self) -> dict[str, torch.Tensor]:
        return {k: torch.from_numpy(v.copy()) for k, v in self.model_state.items()}

    def restore_model(self, model: nn.Module) -> None:
        try:
            model.load_state_dict(self.model_state_dict())
        except RuntimeError as e:
            raise CheckpointError(f"checkpoint does not fit the model: {e}") from e

    def restore_optimizer(self, optimizer: Optimizer) -> None:
        if not self.header.param_groups:
            raise CheckpointError("checkpoint has no optimizer state")
        state = {
            index: {k: torch.from_numpy(v.copy()) for k, v in entries.items()}
            for index, entries in self.optimizer_state.items()
        }
        groups = self.header.param_groups
        optimizer.load_state_dict({"state": state, "param_groups": groups})


def _to_array(value: torch.Tensor) -> np.ndarray:
    return value.detach().cpu().contiguous().numpy()


def save_checkpoint(
    path: Path,
    model: nn.Module,
    header: CheckpointHeader,
    optimizer: Optimizer | None = None,
) -> None:
    arrays: dict[str, np.ndarray] = {}
    for name, value in model.state_dict().items():
        arrays[MODEL_PREFIX + name] = _to_array(value)

    param_groups: list[dict[str, Any]] = []
    if optimizer is not None:
        optim_state = optimizer.state_dict()
        param_groups = optim_state["param_groups"]
        for index, entries in optim_state["state"].items():
            for key, value in entries.items():
                if not isinstance(value, torch.Tensor):
                    value = torch.tensor(value)
                arrays[f"{OPTIM_PREFIX}{index}/{key}"] = _to_array(value)

    header = header.model_copy(update={"param_groups": param_groups})
    arrays[HEADER_KEY] = np.array(header.model_dump_json())

    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("wb") as f:
        np.savez(f, **arrays)
    logger.debug(f"Saved checkpoint {path} at step {header.step}")


def load_checkpoint(path: Path) -> Checkpoint:
    if not path.exists():
        raise CheckpointError(f"checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            arrays = {key: archive[key] for key in archive.files}
    except (OSError, ValueError) as e:
        raise CheckpointError(f"{path}: {e}") from e

    if HEADER_KEY not in arrays:
        raise CheckpointError(f"{path}: missing header")
    try:
        header_text = str(arrays.pop(HEADER_KEY))
        header = CheckpointHeader.model_validate(json.loads(header_text))
    except (json.JSONDecodeError, ValidationError) as e:
        raise CheckpointError(f"{path}: bad header: {e}") from e
    if header.format != FORMAT_TAG:
        raise CheckpointError(f"{path}: unsupported format {header.format}")

    model_state: dict[str, np.ndarray] = {}
    optimizer_state: dict[int, dict[str, np.ndarray]] = {}
    for key, value in arrays.items():
        if key.startswith(MODEL_PREFIX):
            model_state[key[len(MODEL_PREFIX) :]] = value
        elif key.startswith(OPTIM_PREFIX):
            index, name = key[len(OPTIM_PREFIX) :].split("/", 1)
            optimizer_state.setdefault(int(index), {})[name] = value
    return Checkpoint(
        header=header, model_state=model_state, optimizer_state=optimizer_state
    )
