"""Exception hierarchy for Dual View Seg"""

from pathlib import Path


class DualViewError(Exception):
    """Base class for every error raised by this package"""


class ConfigError(DualViewError, ValueError):
    """Configuration file or values are invalid"""

    def __init__(self, violations: list[str]):
        self.violations = violations
        super().__init__("; ".join(violations))


class SceneGenerationError(DualViewError, ValueError):
    """A synthetic scene cannot satisfy its placement or uniqueness constraint"""


class GridShapeError(DualViewError, ValueError):
    """A spatial size is not divisible by the requested grid or stride"""


class MaskFormatError(DualViewError, OSError):
    """A mask file is missing, unreadable or not single-channel"""

    def __init__(self, path: Path | str, reason: str):
        self.path = Path(path)
        super().__init__(f"{path}: {reason}")


class ManifestError(DualViewError, OSError):
    """A dataset manifest cannot be read"""


class TokenizationError(DualViewError, ValueError):
    """An expression cannot be tokenized or encoded"""


class MetricsError(DualViewError, ValueError):
    """Metric inputs are empty or inconsistent"""


class CheckpointError(DualViewError, OSError):
    """A checkpoint archive is missing or malformed"""


class TrainingDivergedError(DualViewError, RuntimeError):
    """The training loss became non-finite"""

    def __init__(self, step: int, dump_path: Path | None = None):
        self.step = step
        self.dump_path = dump_path
        message = f"non-finite loss at step {step}"
        if dump_path is not None:
            message += f" (diagnostics: {dump_path})"
        super().__init__(message)


class VariantNotImplementedError(DualViewError, NotImplementedError):
    """An ablation option is named but not implemented"""

    def __init__(self, name: str):
        self.name = name
        super().__init__(f"{name}: not implemented")
