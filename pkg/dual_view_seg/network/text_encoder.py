"""Toy transformer text encoder

Any encoder producing an (L, C_lang) feature with zeroed padding rows can
replace this one; downstream modules only rely on that contract.
"""

from typing import NamedTuple

import torch
from torch import nn

from dual_view_seg.config.settings import ModelConfig
from dual_view_seg.errors import TokenizationError
from dual_view_seg.models.sample import TokenSeq
from dual_view_seg.network.attention import FeedForward, MultiHeadSelfAttention


class LanguageFeature(NamedTuple):
    """Encoded expression: features (B, L, C_lang) and attn_mask (B, L) bool"""

    features: torch.Tensor
    attn_mask: torch.Tensor


def tokens_to_tensors(tokens: list[TokenSeq]) -> tuple[torch.Tensor, torch.Tensor]:
    """Stack token sequences into (B, L) id and mask tensors"""
    ids = torch.tensor([t.ids for t in tokens], dtype=torch.long)
    mask = torch.tensor([t.attn_mask for t in tokens], dtype=torch.bool)
    return ids, mask


class TextBlock(nn.Module):
    def __init__(self, dim: int, heads: int, mlp_ratio: int):
        super().__init__()
        self.attn = MultiHeadSelfAttention(dim, heads)
        self.norm1 = nn.LayerNorm(dim)
        self.ffn = FeedForward(dim, mlp_ratio)
        self.norm2 = nn.LayerNorm(dim)

    def forward(
        self, x: torch.Tensor, attn_mask: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        out, weights = self.attn(x, key_mask=attn_mask[:, None, None, :])
        x = self.norm1(x + out)
        x = self.norm2(x + self.ffn(x))
        return x, weights


class TextEncoder(nn.Module):
    """Embedding table, optional learned positions, post-norm blocks"""

    def __init__(self, vocab_size: int, cfg: ModelConfig):
        super().__init__()
        self.vocab_size = vocab_size
        self.embed = nn.Embedding(vocab_size, cfg.lang_dim)
        self.position: nn.Parameter | None = None
        if cfg.use_position:
            self.position = nn.Parameter(torch.randn(cfg.lang_len, cfg.lang_dim) * 0.02)
        self.blocks = nn.ModuleList(
            TextBlock(cfg.lang_dim, cfg.heads, cfg.mlp_ratio)
            for _ in range(cfg.text_layers)
        )
        self.last_weights: list[torch.Tensor] = []

    def forward(self, ids: torch.Tensor, attn_mask: torch.Tensor) -> LanguageFeature:
        if ids.numel() and (int(ids.min()) < 0 or int(ids.max()) >= self.vocab_size):
            raise TokenizationError(
                f"token id out of range [0, {self.vocab_size}): "
                f"{int(ids.min())}..{int(ids.max())}"
            )
        attn_mask = attn_mask.bool()
        x = self.embed(ids)
        if self.position is not None:
            x = x + self.position[: ids.shape[1]]

        self.last_weights = []
        for block in self.blocks:
            x, weights = block(x, attn_mask)
            self.last_weights.append(weights)

        return LanguageFeature(x * attn_mask[..., None].to(x.dtype), attn_mask)

    def encode(self, tokens: list[TokenSeq]) -> LanguageFeature:
        ids, mask = tokens_to_tensors(tokens)
        return self(ids.to(self.embed.weight.device), mask.to(self.embed.weight.device))
