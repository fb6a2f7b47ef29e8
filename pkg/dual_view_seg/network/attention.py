"""Scaled dot-product attention shared by every attention block"""

import torch
from einops import rearrange
from torch import nn


def attend(
    query: torch.Tensor,
    key: torch.Tensor,
    value: torch.Tensor,
    key_mask: torch.Tensor | None = None,
    scale: float | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """softmax(q @ k^T * scale) @ v over the last two axes

    key_mask is boolean, True where a key may be attended, and broadcasts
    against the (..., Nq, Nk) score tensor. Masked keys get exactly zero
    weight; a query with no valid key gets all-zero weights. Returns the
    output and the attention weights.
    """
    if scale is None:
        scale = query.shape[-1] ** -0.5
    scores = torch.matmul(query, key.transpose(-2, -1)) * scale
    if key_mask is not None:
        scores = scores.masked_fill(~key_mask, float("-inf"))
    weights = scores.softmax(dim=-1)
    if key_mask is not None:
        weights = weights.nan_to_num(0.0)
    return torch.matmul(weights, value), weights


def split_heads(x: torch.Tensor, heads: int) -> torch.Tensor:
    """(..., N, heads*D) -> (..., heads, N, D)"""
    return rearrange(x, "... n (e d) -> ... e n d", e=heads)


def merge_heads(x: torch.Tensor) -> torch.Tensor:
    """(..., heads, N, D) -> (..., N, heads*D)"""
    return rearrange(x, "... e n d -> ... n (e d)")


def multi_head_attend(
    query: torch.Tensor,
    key: torch.Tensor,
    value: torch.Tensor,
    heads: int = 1,
    key_mask: torch.Tensor | None = None,
) -> tuple[torch.Tensor, torch.Tensor]:
    """attend() with the channel axis split into heads

    Scores are scaled by 1/sqrt(channels/heads). key_mask broadcasts against
    (..., heads, Nq, Nk).
    """
    dim = query.shape[-1] // heads
    out, weights = attend(
        split_heads(query, heads),
        split_heads(key, heads),
        split_heads(value, heads),
        key_mask=key_mask,
        scale=dim**-0.5,
    )
    return merge_heads(out), weights


class MultiHeadSelfAttention(nn.Module):
    """Self-attention over token sequences with learned projections"""

    def __init__(self, dim: int, heads: int = 1):
        super().__init__()
        self.heads = heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(
        self, x: torch.Tensor, key_mask: torch.Tensor | None = None
    ) -> tuple[torch.Tensor, torch.Tensor]:
        q, k, v = self.qkv(x).chunk(3, dim=-1)
        out, weights = multi_head_attend(q, k, v, self.heads, key_mask)
        return self.proj(out), weights


class FeedForward(nn.Sequential):
    def __init__(self, dim: int, ratio: int = 2):
        super().__init__(
            nn.Linear(dim, ratio * dim),
            nn.GELU(),
            nn.Linear(ratio * dim, dim),
        )


class LayerNorm2d(nn.LayerNorm):
    """LayerNorm over the channel axis of (B, C, H, W) tensors"""

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        x = x.permute(0, 2, 3, 1)
        x = super().forward(x)
        return x.permute(0, 3, 1, 2)
