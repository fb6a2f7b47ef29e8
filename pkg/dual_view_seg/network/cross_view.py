"""Cross-view window attention

Per stage, language is aligned to the remote view and to the assembled close
view, each result is gated into its vision feature, and the two views then
exchange information between paired windows. Both views are split into the
same number of windows, so a close window holds n_view^2 times the tokens of
its remote partner while covering the same image content.
"""

from math import ceil
from typing import NamedTuple

import torch
from einops import rearrange
from torch import nn

from dual_view_seg.errors import GridShapeError
from dual_view_seg.generators.views import assemble_views, resize, split_views
from dual_view_seg.models.switches import AblationSwitches
from dual_view_seg.network.attention import multi_head_attend
from dual_view_seg.network.text_encoder import LanguageFeature

WINDOW_EXCHANGE_VARIANTS = ("cvwin", "no_gate")


class LanguageAligner(nn.Module):
    """Pixels query the expression tokens

    Q is a 1x1 conv of the vision feature; K and V are linear maps of the
    language feature to the stage width. Padded tokens get zero weight.
    """

    def __init__(self, channels: int, lang_dim: int, heads: int = 1):
        super().__init__()
        self.heads = heads
        self.query = nn.Conv2d(channels, channels, 1)
        self.key = nn.Linear(lang_dim, channels)
        self.value = nn.Linear(lang_dim, channels)
        self.last_weights: torch.Tensor | None = None

    def forward(self, vision: torch.Tensor, language: LanguageFeature) -> torch.Tensor:
        height, width = vision.shape[-2:]
        if vision.shape[0] != language.features.shape[0]:
            raise GridShapeError(
                f"vision batch {vision.shape[0]} != language batch "
                f"{language.features.shape[0]}"
            )
        query = rearrange(self.query(vision), "b c h w -> b (h w) c")
        out, self.last_weights = multi_head_attend(
            query,
            self.key(language.features),
            self.value(language.features),
            self.heads,
            key_mask=language.attn_mask[:, None, None, :],
        )
        return rearrange(out, "b (h w) c -> b c h w", h=height, w=width)


class SentenceBroadcast(nn.Module):
    """Masked mean of the tokens, projected and broadcast to every pixel"""

    def __init__(self, channels: int, lang_dim: int):
        super().__init__()
        self.proj = nn.Linear(lang_dim, channels)

    def forward(self, vision: torch.Tensor, language: LanguageFeature) -> torch.Tensor:
        mask = language.attn_mask[..., None].to(language.features.dtype)
        sentence = (language.features * mask).sum(1) / mask.sum(1).clamp(min=1.0)
        return self.proj(sentence)[:, :, None, None].expand_as(vision)


class GateFusion(nn.Module):
    """out = V + FFN_r(tanh(FFN_g([F, V])) * FFN_f([F, V]))

    With use_gate off the aligned feature is simply added to V.
    """

    def __init__(self, channels: int, use_gate: bool = True):
        super().__init__()
        self.use_gate = use_gate
        if use_gate:
            self.gate = nn.Conv2d(2 * channels, channels, 1)
            self.value = nn.Conv2d(2 * channels, channels, 1)
            self.residual = nn.Conv2d(channels, channels, 1)
        self.last_gate: torch.Tensor | None = None

    def forward(self, aligned: torch.Tensor, vision: torch.Tensor) -> torch.Tensor:
        if aligned.shape != vision.shape:
            raise GridShapeError(
                f"aligned {tuple(aligned.shape)} != vision {tuple(vision.shape)}"
            )
        if not self.use_gate:
            return vision + aligned
        joint = torch.cat([aligned, vision], dim=1)
        self.last_gate = torch.tanh(self.gate(joint))
        return vision + self.residual(self.last_gate * self.value(joint))


class WindowGrid(NamedTuple):
    """A feature cut into n_win x n_win square windows

    windows is (B, n_win^2, window_side^2, C), windows row-major and tokens
    row-major inside each window.
    """

    windows: torch.Tensor
    n_win: int
    window_side: int

    @property
    def resized_side(self) -> int:
        return self.n_win * self.window_side


def window_count(side: int, window: int) -> int:
    return ceil(side / window)


def partition_windows(
    feature: torch.Tensor, n_win: int, window_side: int
) -> WindowGrid:
    """Bilinearly resize to n_win * window_side, then cut into windows"""
    resized = resize(feature, n_win * window_side)
    windows = rearrange(
        resized, "b c (nh sh) (nw sw) -> b (nh nw) (sh sw) c", nh=n_win, nw=n_win
    )
    return WindowGrid(windows, n_win, window_side)


def merge_windows(grid: WindowGrid) -> torch.Tensor:
    """Put every window back at its position: (B, C, side, side)"""
    return rearrange(
        grid.windows,
        "b (nh nw) (sh sw) c -> b c (nh sh) (nw sw)",
        nh=grid.n_win,
        sh=grid.window_side,
    )


class ExchangeProjection(nn.Module):
    """Per-branch q/k/v maps applied before the window exchange"""

    def __init__(self, channels: int):
        super().__init__()
        self.query = nn.Linear(channels, channels)
        self.key = nn.Linear(channels, channels)
        self.value = nn.Linear(channels, channels)


def window_cross_attention(
    query_grid: WindowGrid,
    context_grid: WindowGrid,
    heads: int = 1,
    query_proj: ExchangeProjection | None = None,
    context_proj: ExchangeProjection | None = None,
) -> WindowGrid:
    """Every query window attends to all tokens of its paired context window"""
    if query_grid.n_win != context_grid.n_win:
        raise GridShapeError(
            f"window grids differ: {query_grid.n_win} vs {context_grid.n_win} per side"
        )
    query = query_grid.windows
    key = value = context_grid.windows
    if query_proj is not None:
        query = query_proj.query(query)
    if context_proj is not None:
        key, value = context_proj.key(key), context_proj.value(value)
    out, _ = multi_head_attend(query, key, value, heads)
    return WindowGrid(out, query_grid.n_win, query_grid.window_side)


def exchange_close_to_remote(
    remote_windows: WindowGrid,
    close_windows: WindowGrid,
    heads: int = 1,
    remote_proj: ExchangeProjection | None = None,
    close_proj: ExchangeProjection | None = None,
) -> torch.Tensor:
    """Remote tokens gather detail from their paired close window

    Returns the merged result at the remote resized side.
    """
    grid = window_cross_attention(
        remote_windows, close_windows, heads, remote_proj, close_proj
    )
    return merge_windows(grid)


def exchange_remote_to_close(
    close_windows: WindowGrid,
    remote_windows: WindowGrid,
    heads: int = 1,
    close_proj: ExchangeProjection | None = None,
    remote_proj: ExchangeProjection | None = None,
) -> torch.Tensor:
    """Close tokens gather global semantics from their paired remote window"""
    grid = window_cross_attention(
        close_windows, remote_windows, heads, close_proj, remote_proj
    )
    return merge_windows(grid)


class CrossViewWindowAttention(nn.Module):
    """One stage of language alignment, gating and cross-view exchange

    Input and output are (B * views, C, h, w) with the remote view first in
    each sample group followed by the row-major close patches. Branches
    disabled by the switches are absent from the batch.
    """

    def __init__(
        self,
        channels: int,
        lang_dim: int,
        window: int,
        n_view: int,
        heads: int = 1,
        raw_qkv: bool = True,
        switches: AblationSwitches | None = None,
    ):
        super().__init__()
        self.switches = switches or AblationSwitches()
        self.window = window
        self.n_view = n_view
        self.heads = heads
        variant = self.switches.cvwin_variant

        branches = [
            name
            for name, used in (
                ("remote", self.switches.uses_remote),
                ("close", self.switches.uses_close),
            )
            if used
        ]
        self.aligners = nn.ModuleDict(
            {
                name: (
                    SentenceBroadcast(channels, lang_dim)
                    if variant == "pwam_stub"
                    else LanguageAligner(channels, lang_dim, heads)
                )
                for name in branches
            }
        )
        self.gates = nn.ModuleDict(
            {
                name: GateFusion(channels, use_gate=variant != "no_gate")
                for name in branches
            }
        )

        self.targets = self._exchange_targets()
        self.integrators = nn.ModuleDict(
            {
                name: nn.Conv2d(2 * channels, channels, 1)
                for name in self.targets
                if variant != "direct_sum"
            }
        )
        self.projections = nn.ModuleDict()
        if not raw_qkv and self.targets and variant in WINDOW_EXCHANGE_VARIANTS:
            self.projections = nn.ModuleDict(
                {name: ExchangeProjection(channels) for name in branches}
            )

    def _exchange_targets(self) -> tuple[str, ...]:
        """Branches that receive information from the other view"""
        switches = self.switches
        if not (switches.uses_remote and switches.uses_close):
            return ()
        if switches.exchange_mode == "none" or switches.cvwin_variant == "pwam_stub":
            return ()
        return {
            "bidirectional": ("remote", "close"),
            "remote2close": ("close",),
            "close2remote": ("remote",),
        }[switches.exchange_mode]

    @property
    def views_per_sample(self) -> int:
        count = 1 if self.switches.uses_remote else 0
        return count + (self.n_view**2 if self.switches.uses_close else 0)

    def split_branches(self, x: torch.Tensor) -> dict[str, torch.Tensor]:
        """Batch of views -> remote (B, C, h, w) and assembled close (B, C, nh, nw)"""
        views = self.views_per_sample
        if x.shape[0] % views:
            raise GridShapeError(
                f"batch {x.shape[0]} is not a multiple of {views} views"
            )
        grouped = rearrange(x, "(b v) c h w -> b v c h w", v=views)
        branches: dict[str, torch.Tensor] = {}
        offset = 0
        if self.switches.uses_remote:
            branches["remote"] = grouped[:, 0]
            offset = 1
        if self.switches.uses_close:
            branches["close"] = assemble_views(grouped[:, offset:], self.n_view)
        return branches

    def join_branches(self, branches: dict[str, torch.Tensor]) -> torch.Tensor:
        pieces = []
        if "remote" in branches:
            pieces.append(branches["remote"][:, None])
        if "close" in branches:
            pieces.append(split_views(branches["close"], self.n_view))
        return rearrange(torch.cat(pieces, dim=1), "b v c h w -> (b v) c h w")

    def exchange(self, fused: dict[str, torch.Tensor]) -> dict[str, torch.Tensor]:
        """Information each target branch receives, at that branch's size"""
        if not self.targets:
            return {}
        remote, close = fused["remote"], fused["close"]
        remote_side, close_side = remote.shape[-1], close.shape[-1]

        if self.switches.cvwin_variant not in WINDOW_EXCHANGE_VARIANTS:
            resampled = {
                "remote": resize(close, remote_side),
                "close": resize(remote, close_side),
            }
            return {name: resampled[name] for name in self.targets}

        n_win = window_count(remote_side, self.window)
        remote_grid = partition_windows(remote, n_win, self.window)
        close_grid = partition_windows(close, n_win, self.n_view * self.window)
        remote_proj = self.projections["remote"] if self.projections else None
        close_proj = self.projections["close"] if self.projections else None

        received: dict[str, torch.Tensor] = {}
        if "remote" in self.targets:
            detail = exchange_close_to_remote(
                remote_grid, close_grid, self.heads, remote_proj, close_proj
            )
            received["remote"] = resize(detail, remote_side)
        if "close" in self.targets:
            context = exchange_remote_to_close(
                close_grid, remote_grid, self.heads, close_proj, remote_proj
            )
            received["close"] = resize(context, close_side)
        return received

    def forward(self, x: torch.Tensor, language: LanguageFeature) -> torch.Tensor:
        branches = self.split_branches(x)
        fused = {
            name: self.gates[name](self.aligners[name](vision, language), vision)
            for name, vision in branches.items()
        }
        received = self.exchange(fused)

        out: dict[str, torch.Tensor] = {}
        for name, feature in fused.items():
            if name not in received:
                out[name] = feature
            elif name in self.integrators:
                joint = torch.cat([feature, received[name]], dim=1)
                out[name] = feature + self.integrators[name](joint)
            else:
                out[name] = feature + received[name]
        return self.join_branches(out)
