"""Collaboratively dilated attention over the stage-4 feature

The feature is cut into slices of S columns. Each query row of a slice
attends to a bank of key rows gathered at the dilated vertical offsets
0, +-d_0, ..., +-d_{J-1}. A second operator with its own weights repeats
this on the transposed map.
"""

from math import ceil

import torch
import torch.nn.functional as F
from einops import rearrange
from pydantic import BaseModel, ConfigDict
from torch import nn

from dual_view_seg.errors import GridShapeError
from dual_view_seg.generators.views import resize, split_views
from dual_view_seg.network.attention import LayerNorm2d, multi_head_attend


class DilationSpec(BaseModel):
    """Slice geometry and dilation offsets for one stage-4 side

    Offsets are non-decreasing, strictly increasing once the adjusted side
    reaches 2^J, and never exceed floor(adjusted_side / 2).
    """

    model_config = ConfigDict(frozen=True)

    slice_size: int
    density: int
    n_slice: int
    adjusted_side: int
    offsets: tuple[int, ...]

    @property
    def shifts(self) -> tuple[int, ...]:
        """Row shift of every bank group: 0, +d0, -d0, +d1, -d1, ..."""
        shifts = [0]
        for d in self.offsets:
            shifts.extend((d, -d))
        return tuple(shifts)

    @property
    def group_count(self) -> int:
        return 2 * self.density + 1

    @property
    def bank_width(self) -> int:
        return self.group_count * self.slice_size


def make_dilation_spec(side: int, slice_size: int, density: int) -> DilationSpec:
    """Geometry for a stage-4 feature of the given side"""
    if side < 1 or slice_size < 1 or density < 1:
        raise ValueError("side, slice_size and density must all be >= 1")
    n_slice = ceil(side / slice_size)
    adjusted = n_slice * slice_size
    offsets = tuple(adjusted // 2 ** (density - j) for j in range(density))
    return DilationSpec(
        slice_size=slice_size,
        density=density,
        n_slice=n_slice,
        adjusted_side=adjusted,
        offsets=offsets,
    )


def coordinate_map(
    side: int, dtype: torch.dtype = torch.float32, device: torch.device | None = None
) -> torch.Tensor:
    """(1, 2, side, side) map of normalized (x, y) in [-1, 1]"""
    axis = torch.linspace(-1.0, 1.0, side, dtype=dtype, device=device)
    if side == 1:
        axis = axis.new_zeros(1)
    ys, xs = torch.meshgrid(axis, axis, indexing="ij")
    return torch.stack([xs, ys])[None]


class PositionalEncoding(nn.Module):
    """Normalized coordinates projected to C_4 by a 1x1 conv"""

    def __init__(self, channels: int):
        super().__init__()
        self.proj = nn.Conv2d(2, channels, 1)

    def forward(self, side: int) -> torch.Tensor:
        weight = self.proj.weight
        return self.proj(coordinate_map(side, weight.dtype, weight.device))


class JointFusion(nn.Module):
    """Downsample the close feature to the remote side, concat, 1x1 conv"""

    def __init__(self, channels: int):
        super().__init__()
        self.proj = nn.Conv2d(2 * channels, channels, 1)

    def forward(self, remote: torch.Tensor, close_full: torch.Tensor) -> torch.Tensor:
        close = resize(close_full, remote.shape[-1])
        return self.proj(torch.cat([remote, close], dim=1))


def pad_rows(x: torch.Tensor, rows: int) -> torch.Tensor:
    """Zero-pad `rows` rows above and below a (B, C, H, W) map"""
    return F.pad(x, (0, 0, rows, rows))


def expand_keys(padded: torch.Tensor, spec: DilationSpec) -> torch.Tensor:
    """Gather the dilated key bank from a row-padded (B, C, 3H, W) map

    Returns (B, H, n_slice, bank_width, C). Group g of the bank holds row
    r + shift_g of the unpadded map, or zeros where that row is out of range.
    """
    side = spec.adjusted_side
    if padded.shape[-2] != 3 * side or padded.shape[-1] != side:
        raise GridShapeError(
            f"padded keys {tuple(padded.shape[-2:])} do not match side {side}"
        )
    groups = [
        rearrange(
            padded[:, :, side + shift : 2 * side + shift],
            "b c h (n s) -> b h n s c",
            s=spec.slice_size,
        )
        for shift in spec.shifts
    ]
    return torch.cat(groups, dim=3)


class DilatedRowAttention(nn.Module):
    """One pass: query rows attend over the dilated key bank of their slice

    out = feat + LN(FFN(attention)), LN over channels.
    """

    def __init__(self, channels: int, heads: int = 1):
        super().__init__()
        self.heads = heads
        self.query = nn.Conv2d(channels, channels, 1)
        self.key = nn.Conv2d(channels, channels, 1)
        self.value = nn.Conv2d(channels, channels, 1)
        self.ffn = nn.Conv2d(channels, channels, 1)
        self.norm = LayerNorm2d(channels)
        self.last_weights: torch.Tensor | None = None

    def attend(
        self,
        feat: torch.Tensor,
        joint: torch.Tensor,
        spec: DilationSpec,
        position: torch.Tensor,
    ) -> torch.Tensor:
        """Raw attention output (B, C, H, H) before the FFN and residual"""
        side = spec.adjusted_side
        if feat.shape[-2:] != (side, side) or joint.shape[-2:] != (side, side):
            raise GridShapeError(
                f"features {tuple(feat.shape[-2:])} and {tuple(joint.shape[-2:])} "
                f"do not match the adjusted side {side}"
            )
        query = rearrange(
            self.query(feat + position), "b c h (n s) -> b h n s c", s=spec.slice_size
        )
        key = expand_keys(pad_rows(self.key(joint + position), side), spec)
        value = expand_keys(pad_rows(self.value(joint), side), spec)
        out, self.last_weights = multi_head_attend(query, key, value, self.heads)
        return rearrange(out, "b h n s c -> b c h (n s)")

    def forward(
        self,
        feat: torch.Tensor,
        joint: torch.Tensor,
        spec: DilationSpec,
        position: torch.Tensor,
    ) -> torch.Tensor:
        return feat + self.norm(self.ffn(self.attend(feat, joint, spec, position)))


def transpose_map(x: torch.Tensor) -> torch.Tensor:
    return x.transpose(-2, -1)


class CollaborativeDilatedAttention(nn.Module):
    """Vertical pass, then the transposed pass on its output"""

    def __init__(self, channels: int, heads: int = 1):
        super().__init__()
        self.vertical = DilatedRowAttention(channels, heads)
        self.transposed = DilatedRowAttention(channels, heads)

    def forward(
        self,
        feat: torch.Tensor,
        joint: torch.Tensor,
        spec: DilationSpec,
        position: torch.Tensor,
    ) -> torch.Tensor:
        out = self.vertical(feat, joint, spec, position)
        out = self.transposed(
            transpose_map(out), transpose_map(joint), spec, transpose_map(position)
        )
        return transpose_map(out)


def patchify_close_query(x: torch.Tensor, n_view: int) -> torch.Tensor:
    """Strided sub-features: (B, C, nH, nW) -> (B, n^2, C, H, W)

    Sub-feature (n1, n2) holds x[..., n1::n, n2::n].
    """
    height, width = x.shape[-2:]
    if height % n_view or width % n_view:
        raise GridShapeError(f"side {height}x{width} is not divisible by {n_view}")
    return rearrange(x, "b c (h n1) (w n2) -> b (n1 n2) c h w", n1=n_view, n2=n_view)


def regroup_close_query(x: torch.Tensor, n_view: int) -> torch.Tensor:
    """Inverse of patchify_close_query"""
    return rearrange(x, "b (n1 n2) c h w -> b c (h n1) (w n2)", n1=n_view, n2=n_view)


class DilatedEnhancer(nn.Module):
    """Stage-4 enhancement feeding the decoder

    Builds the joint feature from both views, enhances the remote view and
    the strided close sub-features against it, and returns the remote map
    (B, C, Ha, Ha) and close patches (B, n^2, C, Ha, Ha) at the adjusted side.
    """

    def __init__(
        self,
        channels: int,
        n_view: int,
        slice_size: int,
        density: int,
        heads: int = 1,
    ):
        super().__init__()
        self.n_view = n_view
        self.slice_size = slice_size
        self.density = density
        self.fusion = JointFusion(channels)
        self.position = PositionalEncoding(channels)
        self.attention = CollaborativeDilatedAttention(channels, heads)

    def forward(
        self, remote: torch.Tensor | None, close_full: torch.Tensor | None
    ) -> tuple[torch.Tensor | None, torch.Tensor | None]:
        if remote is not None:
            side = remote.shape[-1]
        elif close_full is not None:
            side = close_full.shape[-1] // self.n_view
        else:
            raise ValueError("at least one view is required")
        spec = make_dilation_spec(side, self.slice_size, self.density)
        adjusted = spec.adjusted_side
        position = self.position(adjusted)

        remote_adj = resize(remote, adjusted) if remote is not None else None
        if remote_adj is None:
            joint = resize(close_full, adjusted)
        elif close_full is None:
            joint = remote_adj
        else:
            joint = self.fusion(remote_adj, close_full)

        remote_out = None
        if remote_adj is not None:
            remote_out = self.attention(remote_adj, joint, spec, position)

        close_out = None
        if close_full is not None:
            n = self.n_view
            queries = patchify_close_query(resize(close_full, n * adjusted), n)
            batch = queries.shape[0]
            enhanced = self.attention(
                queries.flatten(0, 1),
                joint.repeat_interleave(n * n, dim=0),
                spec,
                position,
            )
            regrouped = regroup_close_query(enhanced.unflatten(0, (batch, n * n)), n)
            close_out = split_views(regrouped, n)
        return remote_out, close_out
