"""Full dual-view referring segmentation model"""

from logging import getLogger

import torch
from einops import rearrange
from torch import nn

from dual_view_seg.config.settings import ModelConfig
from dual_view_seg.errors import VariantNotImplementedError
from dual_view_seg.generators.views import assemble_views
from dual_view_seg.models.switches import AblationSwitches
from dual_view_seg.network.backbone import FeaturePyramid, VisionBackbone
from dual_view_seg.network.cross_view import CrossViewWindowAttention
from dual_view_seg.network.decoder import CrossViewDecoder, DecoderState
from dual_view_seg.network.dilated import DilatedEnhancer
from dual_view_seg.network.text_encoder import LanguageFeature, TextEncoder

logger = getLogger(__name__)


class DualViewSegmenter(nn.Module):
    """Text encoder, windowed backbone with per-stage cross-view attention,
    dilated stage-4 enhancement and the cross-view decoder

    forward takes remote (B, 3, H, W), close (B, n^2, 3, H, W), token ids and
    attention mask (B, L) and returns the DecoderState, whose pred is
    (B, 2, nH, nW).
    """

    def __init__(
        self,
        cfg: ModelConfig,
        vocab_size: int,
        switches: AblationSwitches | None = None,
    ):
        super().__init__()
        switches = switches or AblationSwitches()
        if switches.decoder_variant == "arc":
            raise VariantNotImplementedError("arc decoder")
        self.cfg = cfg
        self.switches = switches

        self.text = TextEncoder(vocab_size, cfg)
        self.backbone = VisionBackbone(cfg)
        self.cross_view = nn.ModuleList(
            CrossViewWindowAttention(
                channels,
                cfg.lang_dim,
                cfg.win_size[i],
                cfg.n_view,
                cfg.heads,
                cfg.raw_qkv,
                switches,
            )
            for i, channels in enumerate(cfg.stage_channels)
        )
        self.enhancer: DilatedEnhancer | None = None
        if switches.cda_enabled:
            self.enhancer = DilatedEnhancer(
                cfg.stage_channels[-1],
                cfg.n_view,
                cfg.slice_size,
                cfg.dilation_density,
                cfg.heads,
            )
        self.decoder = CrossViewDecoder(
            cfg.stage_channels,
            cfg.compression_channels,
            cfg.n_view,
            uses_remote=switches.uses_remote,
            uses_close=switches.uses_close,
            steps=switches.num_decoder_steps,
            skip_enabled=switches.skip_enabled,
        )
        logger.debug(f"Built model with {count_params(self)} parameters")

    @property
    def views_per_sample(self) -> int:
        return self.decoder.views_per_sample

    def stack_views(self, remote: torch.Tensor, close: torch.Tensor) -> torch.Tensor:
        """(B, 3, H, W) + (B, n^2, 3, H, W) -> (B * views, 3, H, W)"""
        pieces = []
        if self.switches.uses_remote:
            pieces.append(remote[:, None])
        if self.switches.uses_close:
            pieces.append(close)
        return rearrange(torch.cat(pieces, dim=1), "b v c h w -> (b v) c h w")

    def encode(
        self,
        remote: torch.Tensor,
        close: torch.Tensor,
        ids: torch.Tensor,
        attn_mask: torch.Tensor,
    ) -> tuple[LanguageFeature, FeaturePyramid]:
        language = self.text(ids, attn_mask)
        images = self.stack_views(remote, close)
        hooks = list(self.cross_view)
        pyramid = self.backbone.forward_pyramid(images, language, hooks)
        return language, pyramid

    def bottleneck(self, top: torch.Tensor) -> torch.Tensor:
        """D_1 from the enhanced stage-4 batch, same view layout"""
        if self.enhancer is None:
            return top
        grouped = rearrange(top, "(b v) c h w -> b v c h w", v=self.views_per_sample)

        n = self.cfg.n_view
        remote = grouped[:, 0] if self.switches.uses_remote else None
        close_full = None
        if self.switches.uses_close:
            offset = 1 if self.switches.uses_remote else 0
            close_full = assemble_views(grouped[:, offset:], n)

        remote_out, close_out = self.enhancer(remote, close_full)
        pieces = []
        if remote_out is not None:
            pieces.append(remote_out[:, None])
        if close_out is not None:
            pieces.append(close_out)
        return rearrange(torch.cat(pieces, dim=1), "b v c h w -> (b v) c h w")

    def forward(
        self,
        remote: torch.Tensor,
        close: torch.Tensor,
        ids: torch.Tensor,
        attn_mask: torch.Tensor,
    ) -> DecoderState:
        _, pyramid = self.encode(remote, close, ids, attn_mask)
        first = self.bottleneck(pyramid.enhanced[-1])
        return self.decoder(first, pyramid.enhanced, self.cfg.supervision_side)


def count_params(model: nn.Module) -> int:
    """Total number of parameters"""
    return sum(p.numel() for p in model.parameters())


def count_params_by_module(model: nn.Module) -> dict[str, int]:
    """Parameter count per top-level child"""
    return {name: count_params(child) for name, child in model.named_children()}
