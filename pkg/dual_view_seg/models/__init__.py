"""Data models for Dual View Seg"""

from dual_view_seg.models.records import EvalRecord, ManifestRecord
from dual_view_seg.models.sample import (
    COLORS,
    POSITION_PHRASES,
    POSITIONS,
    SHAPES,
    SIZES,
    Sample,
    SampleMeta,
    SceneObject,
    SceneSpec,
    TokenSeq,
    ViewBundle,
)
from dual_view_seg.models.switches import PRESETS, AblationSwitches

__all__ = [
    "COLORS",
    "POSITIONS",
    "POSITION_PHRASES",
    "PRESETS",
    "SHAPES",
    "SIZES",
    "AblationSwitches",
    "EvalRecord",
    "ManifestRecord",
    "Sample",
    "SampleMeta",
    "SceneObject",
    "SceneSpec",
    "TokenSeq",
    "ViewBundle",
]
