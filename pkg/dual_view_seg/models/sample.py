"""Synthetic scene and sample models"""

from typing import Literal

import numpy as np
import torch
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

Shape = Literal["circle", "square", "triangle", "diamond", "bar"]
SizeWord = Literal["small", "medium", "large"]
SizeClass = Literal["tiny", "large"]

COLORS: dict[str, tuple[int, int, int]] = {
    "red": (220, 40, 40),
    "green": (40, 180, 60),
    "blue": (40, 80, 220),
    "yellow": (235, 220, 50),
    "cyan": (50, 215, 225),
    "magenta": (215, 50, 200),
    "white": (245, 245, 245),
    "orange": (245, 140, 30),
}
SHAPES: tuple[str, ...] = ("circle", "square", "triangle", "diamond", "bar")
SIZES: tuple[str, ...] = ("small", "medium", "large")
POSITIONS: tuple[str, ...] = (
    "top-left",
    "top",
    "top-right",
    "left",
    "center",
    "right",
    "bottom-left",
    "bottom",
    "bottom-right",
)
POSITION_PHRASES: dict[str, str] = {
    "top-left": "at the top left",
    "top": "at the top",
    "top-right": "at the top right",
    "left": "on the left",
    "center": "in the center",
    "right": "on the right",
    "bottom-left": "at the bottom left",
    "bottom": "at the bottom",
    "bottom-right": "at the bottom right",
}


class SceneObject(BaseModel):
    """One rendered object and its describable attributes"""

    shape: str
    color: str
    size: str
    position: str
    center: tuple[int, int]
    radius: int
    vertical: bool = False

    @property
    def size_class(self) -> SizeClass:
        return "tiny" if self.size == "small" else "large"

    def attribute(self, name: str) -> str:
        return str(getattr(self, name))


class SceneSpec(BaseModel):
    """Knobs of the synthetic scene generator"""

    model_config = ConfigDict(frozen=True)

    image_side: int = 800
    min_objects: int = Field(default=2, ge=1, le=6)
    max_objects: int = Field(default=6, ge=1, le=6)
    colors: tuple[str, ...] = tuple(COLORS)
    shapes: tuple[str, ...] = SHAPES
    radius_fraction: dict[str, tuple[float, float]] = Field(
        default_factory=lambda: {
            "small": (0.025, 0.04),
            "medium": (0.06, 0.08),
            "large": (0.10, 0.13),
        }
    )
    min_radius_px: int = Field(default=6, ge=1)
    tiny_fraction: float = Field(default=0.5, ge=0.0, le=1.0)
    max_attempts: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def check_ranges(self) -> "SceneSpec":
        if self.min_objects > self.max_objects:
            raise ValueError("min_objects must not exceed max_objects")
        unknown = [c for c in self.colors if c not in COLORS]
        unknown += [s for s in self.shapes if s not in SHAPES]
        if unknown:
            raise ValueError(f"unknown palette entries: {unknown}")
        return self

    def fingerprint(self) -> str:
        """Stable key for caching samples generated under this spec"""
        return self.model_dump_json()


class SampleMeta(BaseModel):
    """Target description carried alongside a sample"""

    category: str
    size_class: str
    position: str
    objects: list[SceneObject] = Field(default_factory=list)
    target_index: int = 0


class Sample(BaseModel):
    """One image-mask-expression triplet"""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sample_id: str
    image: np.ndarray
    mask: np.ndarray
    expression: str
    meta: SampleMeta

    @field_validator("image")
    @classmethod
    def check_image(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 3 or v.shape[2] != 3:
            raise ValueError(f"image must be HxWx3, got {v.shape}")
        return v

    @field_validator("mask")
    @classmethod
    def check_mask(cls, v: np.ndarray) -> np.ndarray:
        if v.ndim != 2:
            raise ValueError(f"mask must be 2-D, got {v.shape}")
        if not np.isin(v, (0, 1)).all():
            raise ValueError("mask values must be 0 or 1")
        if not v.any():
            raise ValueError("mask has no foreground pixel")
        return v


class TokenSeq(BaseModel):
    """Fixed-length token ids with their validity mask"""

    model_config = ConfigDict(frozen=True)

    ids: tuple[int, ...]
    attn_mask: tuple[bool, ...]

    @model_validator(mode="after")
    def check_lengths(self) -> "TokenSeq":
        if len(self.ids) != len(self.attn_mask):
            raise ValueError("ids and attn_mask lengths differ")
        if not any(self.attn_mask):
            raise ValueError("token sequence has no real token")
        return self

    def __len__(self) -> int:
        return len(self.ids)


class ViewBundle(BaseModel):
    """Dual-view inputs of one sample

    remote is (3, H, W); close is (n_view^2, 3, H, W) in row-major patch order;
    mask_full is (n_view*H, n_view*W).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    sample_id: str
    remote: torch.Tensor
    close: torch.Tensor
    mask_full: torch.Tensor
    tokens: TokenSeq
    category: str = ""
    size_class: str = ""
