"""Model and training configuration for Dual View Seg"""

from collections.abc import Mapping
from logging import getLogger
from math import isclose
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError, field_validator

from dual_view_seg.config.constants import INPUT_MULTIPLE, NUM_STAGES
from dual_view_seg.errors import ConfigError

logger = getLogger(__name__)


def _split_ints(value: Any) -> Any:
    """Accept "32,64,128" strings and bare ints for tuple-valued fields"""
    if isinstance(value, str):
        return tuple(int(part) for part in value.replace(" ", "").split(",") if part)
    if isinstance(value, int):
        return (value,) * NUM_STAGES
    return value


class ModelConfig(BaseModel):
    """Network geometry and widths

    Toy defaults replace the large pretrained widths; every module reads its
    channels from here.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    input_side: int = 384
    n_view: int = 2
    stage_channels: tuple[int, ...] = (32, 64, 128, 256)
    lang_dim: int = 64
    lang_len: int = 20
    win_size: tuple[int, ...] = (4, 4, 4, 4)
    slice_size: int = 5
    dilation_density: int = 3
    cmp_channels: int | None = None
    heads: int = 1
    text_layers: int = 2
    stage_depth: int = 2
    mlp_ratio: int = 2
    use_position: bool = True
    raw_qkv: bool = True
    seed: int = 0

    @field_validator("stage_channels", "win_size", mode="before")
    @classmethod
    def parse_int_tuple(cls, v: Any) -> Any:
        return _split_ints(v)

    @field_validator("cmp_channels", mode="before")
    @classmethod
    def parse_optional(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in {"", "none", "auto"}:
            return None
        return v

    @property
    def compression_channels(self) -> int:
        """Decoder width, half the last stage width unless overridden"""
        if self.cmp_channels is not None:
            return self.cmp_channels
        return max(1, self.stage_channels[-1] // 2)

    @property
    def stage_sides(self) -> list[int]:
        """Feature side per stage: H / 2^(i+1) for i = 1..4"""
        return [self.input_side // 2 ** (i + 1) for i in range(1, NUM_STAGES + 1)]

    @property
    def supervision_side(self) -> int:
        return self.n_view * self.input_side


class TrainConfig(BaseModel):
    """Optimizer, schedule, loss weighting and synthetic data knobs"""

    model_config = ConfigDict(frozen=True, extra="forbid")

    lr: float = 5e-5
    weight_decay: float = 0.01
    poly_power: float = 0.9
    epochs: int = 40
    batch_size: int = 8
    max_steps: int | None = None
    dice_weight: float = 0.9
    bce_weight: float = 0.1
    threshold: float = 0.5
    train_samples: int = 200
    val_samples: int = 0
    scene_side: int = 800
    tiny_fraction: float = 0.5
    num_workers: int = 0

    @field_validator("max_steps", mode="before")
    @classmethod
    def parse_optional(cls, v: Any) -> Any:
        if isinstance(v, str) and v.strip().lower() in {"", "none"}:
            return None
        return v


def validate_config(cfg: ModelConfig, train: TrainConfig | None = None) -> list[str]:
    """Return every invariant violation as a readable string

    Never raises; an empty list means the configuration is usable.
    """
    violations: list[str] = []

    if cfg.input_side <= 0 or cfg.input_side % INPUT_MULTIPLE != 0:
        violations.append(f"H mod {INPUT_MULTIPLE} != 0")
    if cfg.n_view < 1:
        violations.append("n_view must be >= 1")
    if cfg.dilation_density < 1:
        violations.append("dilation_density (J) must be >= 1")
    if cfg.slice_size < 1:
        violations.append("slice_size must be >= 1")
    if len(cfg.win_size) != NUM_STAGES:
        violations.append(f"win_size needs {NUM_STAGES} entries")
    if any(w < 1 for w in cfg.win_size):
        violations.append("win_size must be >= 1")
    if cfg.compression_channels < 1:
        violations.append("cmp_channels must be >= 1")
    if cfg.lang_len < 1:
        violations.append("lang_len must be >= 1")
    if cfg.lang_dim < 1:
        violations.append("lang_dim must be >= 1")
    if cfg.heads < 1:
        violations.append("heads must be >= 1")
    if cfg.text_layers < 1 or cfg.stage_depth < 1 or cfg.mlp_ratio < 1:
        violations.append("text_layers, stage_depth and mlp_ratio must be >= 1")

    channels = cfg.stage_channels
    if len(channels) != NUM_STAGES:
        violations.append(f"stage_channels needs {NUM_STAGES} entries")
    if any(c < 1 for c in channels):
        violations.append("stage_channels must be positive")
    if any(b <= a for a, b in zip(channels, channels[1:])):
        violations.append("stage_channels must be strictly increasing")
    if cfg.heads >= 1:
        widths = [*channels, cfg.lang_dim]
        if any(w % cfg.heads for w in widths):
            violations.append("heads must divide every stage width and lang_dim")

    if train is not None:
        violations.extend(validate_train_config(train))

    return violations


def validate_train_config(train: TrainConfig) -> list[str]:
    """Invariant violations of the training configuration"""
    violations: list[str] = []
    if not isclose(train.dice_weight + train.bce_weight, 1.0, abs_tol=1e-9):
        violations.append("weights do not sum to 1")
    if train.lr <= 0:
        violations.append("lr must be > 0")
    if train.weight_decay < 0:
        violations.append("weight_decay must be >= 0")
    if train.epochs < 1 or train.batch_size < 1:
        violations.append("epochs and batch_size must be >= 1")
    if train.max_steps is not None and train.max_steps < 1:
        violations.append("max_steps must be >= 1")
    if not 0.0 <= train.threshold <= 1.0:
        violations.append("threshold must lie in [0, 1]")
    if not 0.0 <= train.tiny_fraction <= 1.0:
        violations.append("tiny_fraction must lie in [0, 1]")
    if train.train_samples < 1 or train.val_samples < 0:
        violations.append("train_samples must be >= 1 and val_samples >= 0")
    return violations


def parse_config_text(text: str) -> dict[str, str]:
    """Parse flat ``key = value`` lines; ``#`` starts a comment"""
    values: dict[str, str] = {}
    bad_lines: list[str] = []
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            bad_lines.append(f"line {number}: expected 'key = value'")
            continue
        values[key.strip()] = value.strip()
    if bad_lines:
        raise ConfigError(bad_lines)
    return values


def load_settings(
    path: Path | None = None,
    overrides: Mapping[str, str] | None = None,
) -> tuple[ModelConfig, TrainConfig]:
    """Load configs from file, apply CLI overrides, validate

    - No file: defaults are used
    - File values are merged over defaults (file values take priority)
    - Overrides are applied last
    Raises ConfigError listing every problem found.
    """
    user: dict[str, str] = {}
    if path is not None:
        if not path.exists():
            raise ConfigError([f"config file not found: {path}"])
        user = parse_config_text(path.read_text(encoding="utf-8"))
        logger.debug(f"Loaded {len(user)} keys from {path}")
    merged = {**user, **dict(overrides or {})}

    model_keys = set(ModelConfig.model_fields)
    train_keys = set(TrainConfig.model_fields)
    unknown = sorted(set(merged) - model_keys - train_keys)
    if unknown:
        raise ConfigError([f"unknown key: {key}" for key in unknown])

    try:
        model = ModelConfig(**{k: v for k, v in merged.items() if k in model_keys})
        train = TrainConfig(**{k: v for k, v in merged.items() if k in train_keys})
    except ValidationError as e:
        raise ConfigError(
            [f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors()]
        ) from e

    violations = validate_config(model, train)
    if violations:
        raise ConfigError(violations)
    return model, train


def dump_settings(model: ModelConfig, train: TrainConfig | None = None) -> str:
    """Render configs back to the flat ``key = value`` format"""
    lines = []
    for cfg in (model, train):
        if cfg is None:
            continue
        for key, value in cfg.model_dump().items():
            if isinstance(value, tuple):
                value = ",".join(str(v) for v in value)
            lines.append(f"{key} = {'none' if value is None else value}")
    return "\n".join(lines) + "\n"
