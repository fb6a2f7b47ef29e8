"""Configuration module for Dual View Seg"""

from dual_view_seg.config.constants import (
    CACHE_EXPIRY_DAYS,
    PRECISION_THRESHOLDS,
)
from dual_view_seg.config.paths import (
    CACHE_DIR,
    DATA_DIR,
    PROJECT_ROOT,
    RUNS_DIR,
    VOCAB_FILE,
)
from dual_view_seg.config.seeding import seed_all
from dual_view_seg.config.settings import (
    ModelConfig,
    TrainConfig,
    dump_settings,
    load_settings,
    parse_config_text,
    validate_config,
    validate_train_config,
)

__all__ = [
    "PROJECT_ROOT",
    "DATA_DIR",
    "CACHE_DIR",
    "RUNS_DIR",
    "VOCAB_FILE",
    "CACHE_EXPIRY_DAYS",
    "PRECISION_THRESHOLDS",
    "ModelConfig",
    "TrainConfig",
    "dump_settings",
    "load_settings",
    "parse_config_text",
    "seed_all",
    "validate_config",
    "validate_train_config",
]
