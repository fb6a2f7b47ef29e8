"""Global seeding"""

import random
from logging import getLogger

import numpy as np
import torch

logger = getLogger(__name__)


def seed_all(seed: int) -> None:
    """Make weight init, data generation and shuffling deterministic"""
    if seed < 0:
        raise ValueError(f"seed must be >= 0, got {seed}")
    random.seed(seed)
    np.random.seed(seed)
    torch.manual_seed(seed)
    torch.use_deterministic_algorithms(True, warn_only=True)
    logger.debug(f"Seeded all random sources with {seed}")
