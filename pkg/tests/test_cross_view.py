import pytest
import torch

from dual_view_seg.errors import GridShapeError
from dual_view_seg.models import AblationSwitches
from dual_view_seg.network.attention import attend
from dual_view_seg.network.cross_view import (
    CrossViewWindowAttention,
    GateFusion,
    LanguageAligner,
    SentenceBroadcast,
    exchange_close_to_remote,
    exchange_remote_to_close,
    merge_windows,
    partition_windows,
    window_count,
    window_cross_attention,
)
from dual_view_seg.network.text_encoder import LanguageFeature
from dual_view_seg.verification import run_oracle


def _language(batch: int, length: int = 5, dim: int = 6, real: int = 3):
    mask = torch.zeros(batch, length, dtype=torch.bool)
    mask[:, :real] = True
    features = torch.randn(batch, length, dim) * mask[..., None]
    return LanguageFeature(features, mask)


def test_aligner_output_and_padding():
    aligner = LanguageAligner(4, 6)
    vision = torch.randn(2, 4, 3, 3)
    language = _language(2)

    out = aligner(vision, language)

    assert out.shape == vision.shape
    assert (aligner.last_weights[..., 3:] == 0).all()
    noisy = LanguageFeature(
        language.features + torch.randn(2, 5, 6) * ~language.attn_mask[..., None],
        language.attn_mask,
    )
    torch.testing.assert_close(aligner(vision, noisy), out)


def test_aligner_rejects_batch_mismatch():
    with pytest.raises(GridShapeError):
        LanguageAligner(4, 6)(torch.randn(3, 4, 2, 2), _language(2))


def test_sentence_broadcast_is_constant_over_pixels():
    out = SentenceBroadcast(4, 6)(torch.randn(2, 4, 3, 3), _language(2))
    assert out.shape == (2, 4, 3, 3)
    torch.testing.assert_close(out, out[..., :1, :1].expand_as(out))


def test_gate_with_zero_residual_keeps_vision():
    gate = GateFusion(4)
    with torch.no_grad():
        gate.residual.weight.zero_()
        gate.residual.bias.zero_()
    vision = torch.randn(1, 4, 2, 2)

    torch.testing.assert_close(gate(torch.randn(1, 4, 2, 2), vision), vision)
    assert gate.last_gate.abs().max() <= 1.0


def test_gate_disabled_adds_features():
    gate = GateFusion(4, use_gate=False)
    aligned, vision = torch.randn(1, 4, 2, 2), torch.randn(1, 4, 2, 2)
    torch.testing.assert_close(gate(aligned, vision), aligned + vision)
    assert not list(gate.parameters())


def test_gate_rejects_shape_mismatch():
    with pytest.raises(GridShapeError):
        GateFusion(4)(torch.randn(1, 4, 2, 2), torch.randn(1, 4, 3, 3))


@pytest.mark.parametrize("side, window, expected", [(8, 2, 4), (5, 2, 3), (1, 4, 1)])
def test_window_count(side, window, expected):
    assert window_count(side, window) == expected


def test_partition_windows_layout():
    feature = torch.arange(16.0).reshape(1, 1, 4, 4)

    grid = partition_windows(feature, 2, 2)

    assert grid.windows.shape == (1, 4, 4, 1)
    assert grid.windows[0, 1, :, 0].tolist() == [2.0, 3.0, 6.0, 7.0]
    torch.testing.assert_close(merge_windows(grid), feature)


def test_partition_resizes_to_the_window_multiple():
    grid = partition_windows(torch.randn(2, 3, 5, 5), 3, 2)
    assert grid.resized_side == 6
    assert merge_windows(grid).shape == (2, 3, 6, 6)


def test_single_window_exchange_is_full_cross_attention():
    remote = torch.randn(1, 4, 2, 2)
    close = torch.randn(1, 4, 4, 4)
    remote_grid = partition_windows(remote, 1, 2)
    close_grid = partition_windows(close, 1, 4)

    detail = exchange_close_to_remote(remote_grid, close_grid)
    context = exchange_remote_to_close(close_grid, remote_grid)

    r = remote.flatten(2).transpose(1, 2)
    c = close.flatten(2).transpose(1, 2)
    expected_detail, _ = attend(r, c, c)
    expected_context, _ = attend(c, r, r)
    torch.testing.assert_close(
        detail, expected_detail.transpose(1, 2).reshape(1, 4, 2, 2)
    )
    torch.testing.assert_close(
        context, expected_context.transpose(1, 2).reshape(1, 4, 4, 4)
    )


def test_mismatched_grids_are_rejected():
    with pytest.raises(GridShapeError):
        window_cross_attention(
            partition_windows(torch.randn(1, 2, 4, 4), 2, 2),
            partition_windows(torch.randn(1, 2, 4, 4), 1, 4),
        )


def test_window_exchange_matches_dense_oracle():
    result = run_oracle("window_attn", trials=8, seed=3)
    assert result.passed, result


def _block(**switches) -> CrossViewWindowAttention:
    return CrossViewWindowAttention(
        8, 6, window=2, n_view=2, switches=AblationSwitches(**switches)
    )


def test_block_keeps_the_view_batch_shape():
    block = _block()
    x = torch.randn(2 * 5, 8, 4, 4)
    assert block(x, _language(2)).shape == x.shape


@pytest.mark.parametrize("raw_qkv", [True, False])
def test_zeroed_gates_and_integrators_pass_vision_through(raw_qkv):
    block = CrossViewWindowAttention(8, 6, window=2, n_view=2, raw_qkv=raw_qkv)
    with torch.no_grad():
        for parameter in [*block.gates.parameters(), *block.integrators.parameters()]:
            parameter.zero_()
    x = torch.randn(2 * 5, 8, 4, 4)

    assert torch.equal(block(x, _language(2)), x)


def test_split_and_join_branches():
    block = _block()
    x = torch.randn(2 * 5, 8, 3, 3)

    branches = block.split_branches(x)

    assert branches["remote"].shape == (2, 8, 3, 3)
    assert branches["close"].shape == (2, 8, 6, 6)
    torch.testing.assert_close(branches["remote"][1], x[5])
    torch.testing.assert_close(branches["close"][0, :, :3, 3:], x[2])
    torch.testing.assert_close(block.join_branches(branches), x)


def test_batch_must_hold_whole_samples():
    with pytest.raises(GridShapeError):
        _block().split_branches(torch.randn(7, 8, 2, 2))


@pytest.mark.parametrize(
    "mode, targets",
    [
        ("bidirectional", ("remote", "close")),
        ("remote2close", ("close",)),
        ("close2remote", ("remote",)),
        ("none", ()),
    ],
)
def test_exchange_targets(mode, targets):
    block = _block(exchange_mode=mode)
    assert block.targets == targets
    assert set(block.integrators) == set(targets)


def test_single_view_blocks_have_no_exchange():
    remote_only = _block(view_mode="only_remote", exchange_mode="none")
    close_only = _block(view_mode="only_close", exchange_mode="none")

    assert remote_only.views_per_sample == 1
    assert close_only.views_per_sample == 4
    assert remote_only(torch.randn(3, 8, 4, 4), _language(3)).shape == (3, 8, 4, 4)
    assert close_only(torch.randn(8, 8, 4, 4), _language(2)).shape == (8, 8, 4, 4)


def test_close_branch_ignores_remote_without_remote2close():
    block = _block(exchange_mode="close2remote").eval()
    language = _language(1)
    x = torch.randn(5, 8, 4, 4)
    changed = x.clone()
    changed[0] = torch.randn(8, 4, 4)

    with torch.no_grad():
        out, other = block(x, language), block(changed, language)

    torch.testing.assert_close(out[1:], other[1:])
    assert not torch.allclose(out[0], other[0])


def test_variants_change_the_modules():
    assert not _block(cvwin_variant="direct_sum").integrators
    stub = _block(cvwin_variant="pwam_stub")
    assert isinstance(stub.aligners["remote"], SentenceBroadcast)
    assert stub.targets == ()
    assert not _block(cvwin_variant="no_gate").gates["close"].use_gate


def test_projected_exchange_has_branch_projections():
    block = CrossViewWindowAttention(8, 6, window=2, n_view=2, raw_qkv=False)
    assert set(block.projections) == {"remote", "close"}
    x = torch.randn(5, 8, 4, 4)
    assert block(x, _language(1)).shape == x.shape


@pytest.mark.parametrize("variant", ["iim_stub", "direct_sum", "no_gate", "pwam_stub"])
def test_variants_run(variant):
    block = _block(cvwin_variant=variant)
    x = torch.randn(5, 8, 4, 4)
    assert block(x, _language(1)).shape == x.shape
