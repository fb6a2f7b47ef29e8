"""Cross-view multiscale decoder and prediction head"""

from typing import NamedTuple

import torch
from einops import rearrange
from torch import nn

from dual_view_seg.errors import GridShapeError
from dual_view_seg.generators.views import assemble_views, resize


class DecoderState(NamedTuple):
    """decoded holds D_1..D_k, intermediates I_2..I_k; pred and logits are
    (B, 2, nH, nW) with channels (background, foreground)"""

    decoded: list[torch.Tensor]
    intermediates: list[torch.Tensor]
    logits: torch.Tensor
    pred: torch.Tensor


class ConvBNReLU(nn.Sequential):
    """3x3 conv, batch norm, ReLU"""

    def __init__(self, in_channels: int, out_channels: int):
        super().__init__(
            nn.Conv2d(in_channels, out_channels, 3, padding=1, bias=False),
            nn.BatchNorm2d(out_channels),
            nn.ReLU(inplace=True),
        )


class DecoderStep(nn.Module):
    """I = CBR([Up(D_prev), F]); D = CBR([I, Up(D_1)])"""

    def __init__(
        self,
        prev_channels: int,
        skip_channels: int,
        encoder_channels: int,
        out_channels: int,
        skip_enabled: bool = True,
    ):
        super().__init__()
        self.skip_enabled = skip_enabled
        self.intermediate = ConvBNReLU(prev_channels + encoder_channels, out_channels)
        merge_in = out_channels + skip_channels if skip_enabled else out_channels
        self.merge = ConvBNReLU(merge_in, out_channels)

    def forward(
        self, previous: torch.Tensor, encoder: torch.Tensor, first: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        size = tuple(encoder.shape[-2:])
        fused = self.intermediate(torch.cat([resize(previous, size), encoder], dim=1))
        if not self.skip_enabled:
            return fused, self.merge(fused)
        return fused, self.merge(torch.cat([fused, resize(first, size)], dim=1))


class CrossViewDecoder(nn.Module):
    """Decode D_1 against the enhanced encoder features of stages 3, 2, 1

    steps (0..3) is how many of D_2..D_4 are computed; the head always reads
    the last one. Every tensor is a batch of views, remote first per sample.
    """

    def __init__(
        self,
        stage_channels: tuple[int, ...],
        compression_channels: int,
        n_view: int,
        uses_remote: bool = True,
        uses_close: bool = True,
        steps: int = 3,
        skip_enabled: bool = True,
    ):
        super().__init__()
        self.n_view = n_view
        self.uses_remote = uses_remote
        self.uses_close = uses_close
        top = stage_channels[-1]
        self.steps = nn.ModuleList(
            DecoderStep(
                top if k == 0 else compression_channels,
                top,
                stage_channels[-2 - k],
                compression_channels,
                skip_enabled,
            )
            for k in range(steps)
        )
        last = top if steps == 0 else compression_channels
        branches = int(uses_remote) + int(uses_close)
        self.head = nn.Conv2d(branches * last, 2, 1)

    @property
    def views_per_sample(self) -> int:
        return int(self.uses_remote) + (self.n_view**2 if self.uses_close else 0)

    def forward(
        self,
        first: torch.Tensor,
        encoder_features: list[torch.Tensor],
        supervision_side: int,
    ) -> DecoderState:
        if len(encoder_features) < len(self.steps) + 1:
            raise GridShapeError(
                f"decoder needs {len(self.steps) + 1} stage features, "
                f"got {len(encoder_features)}"
            )
        decoded = [first]
        intermediates = []
        current = first
        for k, step in enumerate(self.steps):
            fused, current = step(current, encoder_features[-2 - k], first)
            intermediates.append(fused)
            decoded.append(current)
        logits = self.project(current, supervision_side)
        return DecoderState(decoded, intermediates, logits, logits.softmax(dim=1))

    def project(self, last: torch.Tensor, supervision_side: int) -> torch.Tensor:
        """Head logits at the supervision side from the last decoded batch"""
        grouped = rearrange(last, "(b v) c h w -> b v c h w", v=self.views_per_sample)
        parts = []
        offset = 0
        if self.uses_remote:
            parts.append(resize(grouped[:, 0], supervision_side))
            offset = 1
        if self.uses_close:
            close = assemble_views(grouped[:, offset:], self.n_view)
            parts.append(resize(close, supervision_side))
        return self.head(torch.cat(parts, dim=1))


def predict_mask(pred: torch.Tensor, threshold: float = 0.5) -> torch.Tensor:
    """Foreground where the foreground probability is strictly above threshold"""
    return pred[:, 1] > threshold
