"""Four-stage windowed vision backbone

Swin-style interface (4x4 patch stem, 2x patch merging, local window
self-attention) without shifted windows or relative position bias. Remote
images and close patches share the weights and travel as one batch.
"""

from collections.abc import Callable, Sequence
from typing import NamedTuple

import torch
import torch.nn.functional as F
from einops import rearrange
from torch import nn

from dual_view_seg.config.constants import STEM_STRIDE
from dual_view_seg.config.settings import ModelConfig
from dual_view_seg.errors import GridShapeError
from dual_view_seg.network.attention import (
    FeedForward,
    LayerNorm2d,
    MultiHeadSelfAttention,
)
from dual_view_seg.network.text_encoder import LanguageFeature

StageHook = Callable[[torch.Tensor, LanguageFeature], torch.Tensor]


class FeaturePyramid(NamedTuple):
    """Per-stage backbone outputs and their cross-view enhanced versions

    Each entry is (B * views, C_i, H_i, W_i), sample-major, remote first.
    """

    raw: list[torch.Tensor]
    enhanced: list[torch.Tensor]


class PatchEmbed(nn.Module):
    """Non-overlapping 4x4 patch projection"""

    def __init__(self, out_channels: int, in_channels: int = 3):
        super().__init__()
        self.proj = nn.Conv2d(in_channels, out_channels, STEM_STRIDE, STEM_STRIDE)
        self.norm = LayerNorm2d(out_channels)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        height, width = x.shape[-2:]
        if height % STEM_STRIDE or width % STEM_STRIDE:
            raise GridShapeError(
                f"image {height}x{width} is not divisible by "
                f"the stem stride {STEM_STRIDE}"
            )
        return self.norm(self.proj(x))


class PatchMerging(nn.Module):
    """Concatenate 2x2 neighbours and project 4*C_prev -> C"""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__()
        self.norm = nn.LayerNorm(4 * in_channels)
        self.reduction = nn.Linear(4 * in_channels, out_channels, bias=False)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        height, width = x.shape[-2:]
        if height % 2 or width % 2:
            raise GridShapeError(f"feature {height}x{width} cannot be merged 2x2")
        x = rearrange(x, "b c (h p1) (w p2) -> b h w (p1 p2 c)", p1=2, p2=2)
        x = self.reduction(self.norm(x))
        return rearrange(x, "b h w c -> b c h w")


def window_self_attention(
    attn: MultiHeadSelfAttention, x: torch.Tensor, window: int
) -> torch.Tensor:
    """Self-attention inside non-overlapping windows of a (B, H, W, C) map

    The window is clipped to the feature size. Maps are zero-padded up to a
    multiple of the window and padded tokens are masked out as keys.
    """
    batch, height, width, _ = x.shape
    window = max(1, min(window, height, width))
    pad_h, pad_w = -height % window, -width % window
    x = F.pad(x, (0, 0, 0, pad_w, 0, pad_h))
    rows, cols = (height + pad_h) // window, (width + pad_w) // window

    tokens = rearrange(
        x, "b (nh sh) (nw sw) c -> (b nh nw) (sh sw) c", sh=window, sw=window
    )
    key_mask = None
    if pad_h or pad_w:
        valid = x.new_zeros(height + pad_h, width + pad_w, dtype=torch.bool)
        valid[:height, :width] = True
        valid = rearrange(
            valid, "(nh sh) (nw sw) -> (nh nw) (sh sw)", sh=window, sw=window
        )
        key_mask = valid.repeat(batch, 1)[:, None, None, :]

    out, _ = attn(tokens, key_mask=key_mask)
    out = rearrange(
        out,
        "(b nh nw) (sh sw) c -> b (nh sh) (nw sw) c",
        b=batch,
        nh=rows,
        nw=cols,
        sh=window,
    )
    return out[:, :height, :width]


class WindowBlock(nn.Module):
    """Pre-norm window attention and feed-forward, both residual"""

    def __init__(self, dim: int, window: int, heads: int, mlp_ratio: int):
        super().__init__()
        self.window = window
        self.norm1 = nn.LayerNorm(dim)
        self.attn = MultiHeadSelfAttention(dim, heads)
        self.norm2 = nn.LayerNorm(dim)
        self.mlp = FeedForward(dim, mlp_ratio)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = rearrange(x, "b c h w -> b h w c")
        attended = window_self_attention(self.attn, self.norm1(tokens), self.window)
        tokens = tokens + attended
        tokens = tokens + self.mlp(self.norm2(tokens))
        return rearrange(tokens, "b h w c -> b c h w")


class BackboneStage(nn.Module):
    def __init__(
        self,
        downsample: nn.Module,
        channels: int,
        window: int,
        depth: int,
        heads: int,
        mlp_ratio: int,
    ):
        super().__init__()
        self.downsample = downsample
        self.blocks = nn.Sequential(
            *(WindowBlock(channels, window, heads, mlp_ratio) for _ in range(depth))
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.blocks(self.downsample(x))


class VisionBackbone(nn.Module):
    def __init__(self, cfg: ModelConfig):
        super().__init__()
        channels = cfg.stage_channels
        stages = []
        for i, width in enumerate(channels):
            downsample: nn.Module = (
                PatchEmbed(width) if i == 0 else PatchMerging(channels[i - 1], width)
            )
            stages.append(
                BackboneStage(
                    downsample,
                    width,
                    cfg.win_size[i],
                    cfg.stage_depth,
                    cfg.heads,
                    cfg.mlp_ratio,
                )
            )
        self.stages = nn.ModuleList(stages)

    def encode_stage(self, x: torch.Tensor, stage_index: int) -> torch.Tensor:
        """Run one stage: images for stage 0, previous enhanced features after"""
        return self.stages[stage_index](x)

    def forward_pyramid(
        self,
        images: torch.Tensor,
        language: LanguageFeature,
        hooks: Sequence[StageHook | None] | None = None,
    ) -> FeaturePyramid:
        """Encode stage by stage, passing each stage through its cross-view hook

        The enhanced output of stage i is the input of stage i+1; a missing
        hook leaves the stage output unchanged.
        """
        raw: list[torch.Tensor] = []
        enhanced: list[torch.Tensor] = []
        x = images
        for i in range(len(self.stages)):
            v = self.encode_stage(x, i)
            hook = hooks[i] if hooks is not None else None
            x = hook(v, language) if hook is not None else v
            raw.append(v)
            enhanced.append(x)
        return FeaturePyramid(raw, enhanced)
