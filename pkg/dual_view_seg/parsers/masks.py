"""Raster I/O for masks and images"""

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from dual_view_seg.errors import MaskFormatError


def read_mask(path: Path) -> np.ndarray:
    """Read a single-channel raster; any nonzero pixel is foreground"""
    try:
        with Image.open(path) as img:
            img.load()
            bands = img.getbands()
            if len(bands) != 1:
                raise MaskFormatError(path, "mask must be single-channel")
            raster = np.asarray(img)
    except MaskFormatError:
        raise
    except FileNotFoundError as e:
        raise MaskFormatError(path, "file not found") from e
    except (UnidentifiedImageError, OSError, ValueError) as e:
        raise MaskFormatError(path, f"cannot read raster: {e}") from e
    return (raster != 0).astype(np.uint8)


def write_mask(mask: np.ndarray, path: Path) -> None:
    """Write a binary mask as an 8-bit PNG with foreground stored as 255"""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise MaskFormatError(path, f"mask must be 2-D, got shape {mask.shape}")
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.where(mask != 0, 255, 0).astype(np.uint8)).save(
        path, format="PNG"
    )


def read_image(path: Path) -> np.ndarray:
    """Read any raster as HxWx3 uint8 RGB"""
    try:
        with Image.open(path) as img:
            return np.asarray(img.convert("RGB"), dtype=np.uint8).copy()
    except FileNotFoundError:
        raise
    except (UnidentifiedImageError, OSError) as e:
        raise OSError(f"{path}: cannot read image: {e}") from e


def write_image(image: np.ndarray, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.fromarray(np.asarray(image, dtype=np.uint8)).save(
        path, format="PNG"
    )
