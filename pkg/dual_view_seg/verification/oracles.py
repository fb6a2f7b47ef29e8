"""Brute-force equivalence oracles

Each oracle recomputes an operation the slow, obvious way on random toy
inputs and reports the largest deviation from the fast implementation.
"""

from collections.abc import Callable
from logging import getLogger
from typing import NamedTuple

import numpy as np
import torch
from einops import rearrange

from dual_view_seg.config.constants import ORACLE_TOLERANCE
from dual_view_seg.generators.views import resize
from dual_view_seg.network.attention import attend
from dual_view_seg.network.cross_view import (
    exchange_close_to_remote,
    exchange_remote_to_close,
    partition_windows,
    window_count,
)
from dual_view_seg.network.dilated import (
    CollaborativeDilatedAttention,
    DilatedRowAttention,
    DilationSpec,
    PositionalEncoding,
    make_dilation_spec,
    transpose_map,
)
from dual_view_seg.training.metrics import iou, miou, oiou

logger = getLogger(__name__)

DTYPE = torch.float64


class OracleResult(NamedTuple):
    name: str
    trials: int
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def _window_ids(side: int, window: int) -> torch.Tensor:
    """Window index of every row-major token of a side x side map"""
    rows = torch.arange(side) // window
    n_win = side // window
    return (rows[:, None] * n_win + rows[None, :]).reshape(-1)


def dense_window_attention(
    query: torch.Tensor, query_window: int, context: torch.Tensor, context_window: int
) -> torch.Tensor:
    """Cross-attention over all tokens under a same-window mask

    query and context are already at their resized sides (B, C, s, s).
    """
    q_side, k_side = query.shape[-1], context.shape[-1]
    q = rearrange(query, "b c h w -> b (h w) c")
    k = rearrange(context, "b c h w -> b (h w) c")
    mask = _window_ids(q_side, query_window)[:, None] == _window_ids(
        k_side, context_window
    )[None, :]
    out, _ = attend(q, k, k, key_mask=mask, scale=q.shape[-1] ** -0.5)
    return rearrange(out, "b (h w) c -> b c h w", h=q_side)


def window_attention_trial(generator: torch.Generator) -> float:
    """Both exchange directions against the masked dense oracle"""
    channels = int(torch.randint(1, 7, (1,), generator=generator))
    n_view = int(torch.randint(1, 4, (1,), generator=generator))
    window = int(torch.randint(1, 5, (1,), generator=generator))
    side = int(torch.randint(1, 9, (1,), generator=generator))
    remote = torch.randn(1, channels, side, side, generator=generator, dtype=DTYPE)
    close = torch.randn(
        1, channels, n_view * side, n_view * side, generator=generator, dtype=DTYPE
    )

    n_win = window_count(side, window)
    close_window = n_view * window
    remote_grid = partition_windows(remote, n_win, window)
    close_grid = partition_windows(close, n_win, close_window)
    remote_resized = resize(remote, n_win * window)
    close_resized = resize(close, n_win * close_window)

    detail = exchange_close_to_remote(remote_grid, close_grid)
    expected_detail = dense_window_attention(
        remote_resized, window, close_resized, close_window
    )
    context = exchange_remote_to_close(close_grid, remote_grid)
    expected_context = dense_window_attention(
        close_resized, close_window, remote_resized, window
    )
    return max(
        float((detail - expected_detail).abs().max()),
        float((context - expected_context).abs().max()),
    )


def gathered_row_attention(
    layer: DilatedRowAttention,
    feat: torch.Tensor,
    joint: torch.Tensor,
    spec: DilationSpec,
    position: torch.Tensor,
) -> torch.Tensor:
    """One dilated pass with every key row picked by explicit indexing"""
    side, width = spec.adjusted_side, spec.slice_size
    query = layer.query(feat + position)[0]
    key = layer.key(joint + position)[0]
    value = layer.value(joint)[0]
    channels = query.shape[0]
    out = torch.zeros_like(query)
    for row in range(side):
        for piece in range(spec.n_slice):
            cols = slice(piece * width, (piece + 1) * width)
            keys, values = [], []
            for shift in spec.shifts:
                source = row + shift
                if 0 <= source < side:
                    keys.append(key[:, source, cols])
                    values.append(value[:, source, cols])
                else:
                    keys.append(key.new_zeros(channels, width))
                    values.append(value.new_zeros(channels, width))
            k = torch.cat(keys, dim=1).T
            v = torch.cat(values, dim=1).T
            q = query[:, row, cols].T
            weights = torch.softmax(q @ k.T * channels**-0.5, dim=-1)
            out[:, row, cols] = (weights @ v).T
    return feat + layer.norm(layer.ffn(out[None]))


def cda_trial(generator: torch.Generator) -> float:
    """Both passes against the gather-then-attend oracle"""
    channels = int(torch.randint(1, 6, (1,), generator=generator))
    side = int(torch.randint(1, 10, (1,), generator=generator))
    slice_size = int(torch.randint(1, 5, (1,), generator=generator))
    density = int(torch.randint(1, 4, (1,), generator=generator))
    spec = make_dilation_spec(side, slice_size, density)
    adjusted = spec.adjusted_side

    torch.manual_seed(int(torch.randint(0, 2**31 - 1, (1,), generator=generator)))
    attention = CollaborativeDilatedAttention(channels).to(DTYPE).eval()
    encoding = PositionalEncoding(channels).to(DTYPE)
    feat = resize(
        torch.randn(1, channels, side, side, generator=generator, dtype=DTYPE), adjusted
    )
    joint = resize(
        torch.randn(1, channels, side, side, generator=generator, dtype=DTYPE), adjusted
    )

    with torch.no_grad():
        position = encoding(adjusted)
        fast = attention(feat, joint, spec, position)
        vertical = gathered_row_attention(
            attention.vertical, feat, joint, spec, position
        )
        slow = transpose_map(
            gathered_row_attention(
                attention.transposed,
                transpose_map(vertical),
                transpose_map(joint),
                spec,
                transpose_map(position),
            )
        )
    return float((fast - slow).abs().max())


def pixel_loop_counts(pred: np.ndarray, gt: np.ndarray) -> tuple[int, int]:
    intersection = union = 0
    for r in range(pred.shape[0]):
        for c in range(pred.shape[1]):
            p, g = bool(pred[r, c]), bool(gt[r, c])
            intersection += p and g
            union += p or g
    return intersection, union


def metrics_trial(generator: torch.Generator, pairs: int = 4) -> float:
    """Counts must match exactly; ratios within float rounding"""
    seed = int(torch.randint(0, 2**31 - 1, (1,), generator=generator))
    rng = np.random.default_rng(seed)
    records = []
    counts = []
    for i in range(pairs):
        height, width = (int(v) for v in rng.integers(1, 12, size=2))
        pred = rng.random((height, width)) < rng.random()
        gt = rng.random((height, width)) < rng.random()
        record = iou(pred, gt, f"pair_{i}")
        intersection, union = pixel_loop_counts(pred, gt)
        if (record.intersection, record.union) != (intersection, union):
            return float("inf")
        expected = intersection / union if union else 1.0
        if abs(record.iou - expected) > 1e-12:
            return abs(record.iou - expected)
        records.append(record)
        counts.append((intersection, union, expected))

    total_union = sum(u for _, u, _ in counts)
    expected_oiou = sum(i for i, _, _ in counts) / total_union if total_union else 1.0
    expected_miou = sum(e for _, _, e in counts) / len(counts)
    return max(abs(oiou(records) - expected_oiou), abs(miou(records) - expected_miou))


ORACLES: dict[str, tuple[Callable[[torch.Generator], float], float]] = {
    "window_attn": (window_attention_trial, ORACLE_TOLERANCE),
    "cda": (cda_trial, ORACLE_TOLERANCE),
    "metrics": (metrics_trial, 1e-12),
}


def run_oracle(name: str, trials: int = 50, seed: int = 0) -> OracleResult:
    """Run one oracle for a number of random trials; KeyError for unknown names"""
    trial, tolerance = ORACLES[name]
    generator = torch.Generator().manual_seed(seed)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, trial(generator))
    logger.info(f"Oracle {name}: {trials} trials, max deviation {worst:.2e}")
    return OracleResult(name, trials, worst, tolerance)
