"""Central finite-difference gradient checks

Every target builds a small double-precision module in eval mode and a
closure returning its output. The output is contracted with a fixed random
tensor, and analytic gradients are compared against central differences on
a random subset of coordinates of each tensor group. The error of a group
is ||g_analytic - g_numeric|| / max(||g_analytic||, ||g_numeric||, 1e-3), so
groups whose true gradient vanishes are judged against the absolute floor.
Coordinates whose one-sided differences disagree sit on a kink of a ReLU or
clamp and are left out.
"""

from bisect import bisect_right
from collections.abc import Callable
from itertools import accumulate
from logging import getLogger
from typing import NamedTuple

import torch
from torch import nn

from dual_view_seg.config.constants import (
    GRADCHECK_MODEL_TOLERANCE,
    GRADCHECK_MODULE_TOLERANCE,
)
from dual_view_seg.config.settings import ModelConfig
from dual_view_seg.network.backbone import WindowBlock
from dual_view_seg.network.cross_view import (
    CrossViewWindowAttention,
    ExchangeProjection,
    GateFusion,
    LanguageAligner,
    exchange_close_to_remote,
    exchange_remote_to_close,
    partition_windows,
)
from dual_view_seg.network.decoder import CrossViewDecoder
from dual_view_seg.network.dilated import (
    CollaborativeDilatedAttention,
    JointFusion,
    PositionalEncoding,
    make_dilation_spec,
)
from dual_view_seg.network.segmenter import DualViewSegmenter
from dual_view_seg.network.text_encoder import LanguageFeature, TextEncoder
from dual_view_seg.training.losses import total_loss

logger = getLogger(__name__)

DTYPE = torch.float64
STEP = 1e-6
COORDINATES_PER_GROUP = 12
GRADIENT_FLOOR = 1e-3
KINK_RATIO = 1e-4

GRADCHECK_CONFIG = ModelConfig(
    input_side=32,
    n_view=2,
    stage_channels=(8, 12, 16, 20),
    lang_dim=8,
    lang_len=6,
    win_size=(2, 2, 2, 2),
    slice_size=2,
    dilation_density=2,
    text_layers=1,
    stage_depth=1,
)
GRADCHECK_VOCAB = 12


class GradcheckResult(NamedTuple):
    target: str
    group: str
    rel_error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.rel_error < self.tolerance


class GradcheckCase(NamedTuple):
    """A closure and the tensor groups its output is differentiated against"""

    forward: Callable[[], torch.Tensor]
    groups: dict[str, list[torch.Tensor]]
    tolerance: float = GRADCHECK_MODULE_TOLERANCE


def _rand(generator: torch.Generator, *shape: int) -> torch.Tensor:
    return torch.randn(*shape, generator=generator, dtype=DTYPE).requires_grad_()


def _prepare(module: nn.Module) -> nn.Module:
    return module.to(DTYPE).eval()


def _parameter_groups(module: nn.Module) -> dict[str, list[torch.Tensor]]:
    return {name: [p] for name, p in module.named_parameters()}


def _language(
    generator: torch.Generator, batch: int, length: int, dim: int
) -> LanguageFeature:
    mask = torch.ones(batch, length, dtype=torch.bool)
    mask[:, -1] = False
    features = _rand(generator, batch, length, dim)
    return LanguageFeature(features, mask)


def relative_error(analytic: torch.Tensor, numeric: torch.Tensor) -> float:
    scale = max(float(analytic.norm()), float(numeric.norm()), GRADIENT_FLOOR)
    return float((analytic - numeric).norm()) / scale


def check_case(
    case: GradcheckCase,
    seed: int = 0,
    coordinates: int = COORDINATES_PER_GROUP,
    step: float = STEP,
) -> dict[str, float]:
    """Relative error per tensor group of one case"""
    generator = torch.Generator().manual_seed(seed + 1)
    with torch.no_grad():
        probe = torch.randn(case.forward().shape, generator=generator, dtype=DTYPE)

    def objective() -> torch.Tensor:
        return (case.forward() * probe).sum()

    with torch.no_grad():
        center = float(objective())
    tensors = [t for group in case.groups.values() for t in group]
    analytic = torch.autograd.grad(objective(), tensors, allow_unused=True)
    by_tensor = {
        id(t): g if g is not None else torch.zeros_like(t)
        for t, g in zip(tensors, analytic)
    }

    errors: dict[str, float] = {}
    for name, group in case.groups.items():
        flats = [tensor.data.view(-1) for tensor in group]
        grads = [by_tensor[id(tensor)].reshape(-1) for tensor in group]
        bounds = list(accumulate((f.numel() for f in flats), initial=0))
        picks = torch.randperm(bounds[-1], generator=generator)[:coordinates]

        exact: list[float] = []
        estimate: list[float] = []
        for pick in picks.tolist():
            which = bisect_right(bounds, pick) - 1
            flat, index = flats[which], pick - bounds[which]
            original = float(flat[index])
            with torch.no_grad():
                flat[index] = original + step
                upper = float(objective())
                flat[index] = original - step
                lower = float(objective())
                flat[index] = original
            above, below = (upper - center) / step, (center - lower) / step
            if abs(above - below) > KINK_RATIO * max(
                abs(above), abs(below), GRADIENT_FLOOR
            ):
                logger.debug(f"{name}: coordinate {pick} straddles a kink, skipped")
                continue
            estimate.append((upper - lower) / (2 * step))
            exact.append(float(grads[which][index]))
        errors[name] = relative_error(
            torch.tensor(exact, dtype=DTYPE), torch.tensor(estimate, dtype=DTYPE)
        )
    return errors


def _text_encoder(generator: torch.Generator) -> GradcheckCase:
    cfg = GRADCHECK_CONFIG
    encoder = _prepare(TextEncoder(GRADCHECK_VOCAB, cfg))
    ids = torch.randint(2, GRADCHECK_VOCAB, (2, cfg.lang_len), generator=generator)
    mask = torch.ones_like(ids, dtype=torch.bool)
    mask[0, 3:] = False
    ids[0, 3:] = 0
    return GradcheckCase(
        lambda: encoder(ids, mask).features, _parameter_groups(encoder)
    )


def _backbone_block(generator: torch.Generator) -> GradcheckCase:
    block = _prepare(WindowBlock(8, window=3, heads=2, mlp_ratio=2))
    x = _rand(generator, 1, 8, 4, 4)
    return GradcheckCase(lambda: block(x), {"input": [x], **_parameter_groups(block)})


def _align_language(generator: torch.Generator) -> GradcheckCase:
    aligner = _prepare(LanguageAligner(8, 6))
    vision = _rand(generator, 1, 8, 2, 2)
    language = _language(generator, 1, 4, 6)
    return GradcheckCase(
        lambda: aligner(vision, language),
        {
            "vision": [vision],
            "language": [language.features],
            **_parameter_groups(aligner),
        },
    )


def _gate_fuse(generator: torch.Generator) -> GradcheckCase:
    gate = _prepare(GateFusion(4))
    aligned = _rand(generator, 1, 4, 2, 2)
    vision = _rand(generator, 1, 4, 2, 2)
    return GradcheckCase(
        lambda: gate(aligned, vision),
        {"aligned": [aligned], "vision": [vision], **_parameter_groups(gate)},
    )


def _exchange(generator: torch.Generator) -> GradcheckCase:
    remote = _rand(generator, 1, 4, 3, 3)
    close = _rand(generator, 1, 4, 6, 6)
    remote_proj = _prepare(ExchangeProjection(4))
    close_proj = _prepare(ExchangeProjection(4))

    def forward() -> torch.Tensor:
        remote_grid = partition_windows(remote, 2, 2)
        close_grid = partition_windows(close, 2, 4)
        detail = exchange_close_to_remote(
            remote_grid, close_grid, 1, remote_proj, close_proj
        )
        context = exchange_remote_to_close(
            close_grid, remote_grid, 1, close_proj, remote_proj
        )
        return torch.cat([detail.flatten(), context.flatten()])

    return GradcheckCase(
        forward,
        {
            "remote": [remote],
            "close": [close],
            "remote_proj": list(remote_proj.parameters()),
            "close_proj": list(close_proj.parameters()),
        },
    )


def _cvwin(generator: torch.Generator) -> GradcheckCase:
    block = _prepare(CrossViewWindowAttention(8, 6, window=2, n_view=2))
    x = _rand(generator, 5, 8, 4, 4)
    language = _language(generator, 1, 3, 6)
    return GradcheckCase(
        lambda: block(x, language), {"input": [x], **_parameter_groups(block)}
    )


def _fuse_joint(generator: torch.Generator) -> GradcheckCase:
    fusion = _prepare(JointFusion(4))
    remote = _rand(generator, 1, 4, 5, 5)
    close = _rand(generator, 1, 4, 10, 10)
    return GradcheckCase(
        lambda: fusion(remote, close),
        {"remote": [remote], "close": [close], **_parameter_groups(fusion)},
    )


def _cda_enhance(generator: torch.Generator) -> GradcheckCase:
    spec = make_dilation_spec(6, 3, 2)
    attention = _prepare(CollaborativeDilatedAttention(4))
    position = _prepare(PositionalEncoding(4))
    feat = _rand(generator, 1, 4, 6, 6)
    joint = _rand(generator, 1, 4, 6, 6)
    return GradcheckCase(
        lambda: attention(feat, joint, spec, position(6)),
        {
            "feat": [feat],
            "joint": [joint],
            "position": list(position.parameters()),
            **_parameter_groups(attention),
        },
    )


def _decode(generator: torch.Generator) -> GradcheckCase:
    channels = (4, 6, 8, 10)
    decoder = _prepare(CrossViewDecoder(channels, 4, n_view=2))
    sides = (8, 4, 2, 1)
    features = [_rand(generator, 5, c, s, s) for c, s in zip(channels, sides)]
    first = _rand(generator, 5, 10, 1, 1)
    return GradcheckCase(
        lambda: decoder(first, features, 16).pred,
        {
            "first": [first],
            "features": features[:3],
            **_parameter_groups(decoder),
        },
    )


def _losses(generator: torch.Generator) -> GradcheckCase:
    logits = _rand(generator, 2, 6, 6)
    gt = (torch.rand(2, 6, 6, generator=generator) > 0.5).to(DTYPE)
    return GradcheckCase(
        lambda: total_loss(torch.sigmoid(logits), gt).total[None],
        {"pred": [logits]},
    )


def _model(generator: torch.Generator) -> GradcheckCase:
    cfg = GRADCHECK_CONFIG
    model = _prepare(DualViewSegmenter(cfg, GRADCHECK_VOCAB))
    side, n = cfg.input_side, cfg.n_view
    remote = _rand(generator, 1, 3, side, side)
    close = _rand(generator, 1, n * n, 3, side, side)
    ids = torch.randint(2, GRADCHECK_VOCAB, (1, cfg.lang_len), generator=generator)
    mask = torch.ones_like(ids, dtype=torch.bool)
    mask[:, 4:] = False
    groups: dict[str, list[torch.Tensor]] = {"images": [remote, close]}
    for name, child in model.named_children():
        groups[name] = list(child.parameters())
    return GradcheckCase(
        lambda: model(remote, close, ids, mask).pred,
        groups,
        GRADCHECK_MODEL_TOLERANCE,
    )


GRADCHECK_TARGETS: dict[str, Callable[[torch.Generator], GradcheckCase]] = {
    "text-encoder": _text_encoder,
    "backbone-block": _backbone_block,
    "align-language": _align_language,
    "gate-fuse": _gate_fuse,
    "exchange": _exchange,
    "cvwin": _cvwin,
    "fuse-joint": _fuse_joint,
    "cda-enhance": _cda_enhance,
    "decode": _decode,
    "losses": _losses,
    "model": _model,
}


def run_gradcheck(target: str, seed: int = 0) -> list[GradcheckResult]:
    """Check one named target; raises KeyError for unknown names"""
    builder = GRADCHECK_TARGETS[target]
    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)
    case = builder(generator)
    errors = check_case(case, seed)
    results = [
        GradcheckResult(target, group, error, case.tolerance)
        for group, error in errors.items()
    ]
    worst = max((r.rel_error for r in results), default=0.0)
    logger.info(f"Gradcheck {target}: max rel err {worst:.2e}")
    return results
