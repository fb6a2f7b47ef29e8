"""Path constants for Dual View Seg"""

from pathlib import Path
from typing import Final

PACKAGE_DIR: Final[Path] = Path(__file__).parent.parent
PROJECT_ROOT: Final[Path] = PACKAGE_DIR.parent
DATA_DIR: Final[Path] = PROJECT_ROOT / "data"

CACHE_DIR: Final[Path] = DATA_DIR / "cache"
RUNS_DIR: Final[Path] = PROJECT_ROOT / "runs"

VOCAB_FILE: Final[Path] = PACKAGE_DIR / "assets" / "vocab.txt"
