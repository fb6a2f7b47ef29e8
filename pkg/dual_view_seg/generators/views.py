"""Dual-view input preparation and grid utilities"""

from typing import TypeVar

import numpy as np
import torch
import torch.nn.functional as F
from einops import rearrange

from dual_view_seg.config.settings import ModelConfig
from dual_view_seg.errors import GridShapeError
from dual_view_seg.models.sample import Sample, TokenSeq, ViewBundle
from dual_view_seg.parsers.vocabulary import Vocabulary, default_vocabulary

ArrayT = TypeVar("ArrayT", np.ndarray, torch.Tensor)


def split_grid(full: ArrayT, n: int) -> ArrayT:
    """Split the two trailing spatial axes into an n x n grid of tiles

    (..., H, W) -> (n*n, ..., H/n, W/n), tiles in row-major order.
    """
    height, width = full.shape[-2:]
    if n < 1 or height % n or width % n:
        raise GridShapeError(f"spatial size {height}x{width} is not divisible by {n}")
    return rearrange(full, "... (n1 h) (n2 w) -> (n1 n2) ... h w", n1=n, n2=n)


def assemble_grid(grid: ArrayT, n: int | None = None) -> ArrayT:
    """Inverse of split_grid: (n*n, ..., h, w) -> (..., n*h, n*w)"""
    count = grid.shape[0]
    if n is None:
        n = int(round(count**0.5))
    if n * n != count:
        raise GridShapeError(f"{count} tiles do not form a square grid")
    return rearrange(grid, "(n1 n2) ... h w -> ... (n1 h) (n2 w)", n1=n, n2=n)


def split_views(x: torch.Tensor, n: int) -> torch.Tensor:
    """(B, C, nH, nW) -> (B, n*n, C, H, W)"""
    return split_grid(x, n).movedim(0, 1)


def assemble_views(x: torch.Tensor, n: int) -> torch.Tensor:
    """(B, n*n, C, H, W) -> (B, C, nH, nW)"""
    return assemble_grid(x.movedim(1, 0), n)


def resize(
    x: torch.Tensor, side: int | tuple[int, int], mode: str = "bilinear"
) -> torch.Tensor:
    """Resize a (B, C, H, W) tensor; a no-op when the size already matches"""
    size = (side, side) if isinstance(side, int) else side
    if tuple(x.shape[-2:]) == tuple(size):
        return x
    if mode == "nearest":
        return F.interpolate(x, size=size, mode="nearest")
    return F.interpolate(x, size=size, mode=mode, align_corners=False)


def image_to_tensor(image: np.ndarray) -> torch.Tensor:
    """HxWx3 uint8 -> (3, H, W) float32 in [0, 1]"""
    tensor = torch.from_numpy(np.ascontiguousarray(image))
    return tensor.permute(2, 0, 1).float() / 255.0


def prepare_image_views(
    image: np.ndarray, cfg: ModelConfig
) -> tuple[torch.Tensor, torch.Tensor]:
    """Remote view (3, H, W) and close-view patches (n^2, 3, H, W)"""
    side, n = cfg.input_side, cfg.n_view
    source = image_to_tensor(image)[None]
    remote = resize(source, side)[0]
    close_full = resize(source, n * side)[0]
    return remote, split_grid(close_full, n)


def prepare_views(
    sample: Sample,
    cfg: ModelConfig,
    vocab: Vocabulary | None = None,
    tokens: TokenSeq | None = None,
) -> ViewBundle:
    """Build the dual-view bundle of a sample

    The image is bilinearly resized to H x W (remote) and to nH x nW, which is
    split row-major into n x n patches of H x W (close). The mask is resized
    with nearest neighbour to the nH x nW supervision resolution.
    """
    remote, close = prepare_image_views(sample.image, cfg)
    mask = torch.from_numpy(sample.mask.astype(np.float32))[None, None]
    mask_full = resize(mask, cfg.supervision_side, mode="nearest")[0, 0]
    if tokens is None:
        vocab = vocab or default_vocabulary()
        tokens = vocab.tokenize(sample.expression, cfg.lang_len)
    return ViewBundle(
        sample_id=sample.sample_id,
        remote=remote,
        close=close,
        mask_full=mask_full,
        tokens=tokens,
        category=sample.meta.category,
        size_class=sample.meta.size_class,
    )
