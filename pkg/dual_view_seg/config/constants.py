"""Fixed constants for Dual View Seg"""

from typing import Final


NUM_STAGES: Final[int] = 4
STEM_STRIDE: Final[int] = 4
INPUT_MULTIPLE: Final[int] = 32

DICE_EPSILON: Final[float] = 1.0
BCE_CLAMP: Final[float] = 1e-7
PRECISION_THRESHOLDS: Final[tuple[float, ...]] = (0.5, 0.6, 0.7, 0.8, 0.9)

GRADCHECK_MODULE_TOLERANCE: Final[float] = 1e-5
GRADCHECK_MODEL_TOLERANCE: Final[float] = 1e-4
ORACLE_TOLERANCE: Final[float] = 1e-6

CACHE_EXPIRY_DAYS: Final[int] = 30

EXIT_OK: Final[int] = 0
EXIT_FAILURE: Final[int] = 1
EXIT_INVALID_CONFIG: Final[int] = 2
EXIT_MISSING_INPUT: Final[int] = 3
EXIT_DIVERGED: Final[int] = 4
EXIT_VERIFICATION_FAILED: Final[int] = 5
EXIT_NOT_IMPLEMENTED: Final[int] = 6
