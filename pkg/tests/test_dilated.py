import pytest
import torch

from dual_view_seg.errors import GridShapeError
from dual_view_seg.network.dilated import (
    CollaborativeDilatedAttention,
    DilatedEnhancer,
    JointFusion,
    PositionalEncoding,
    coordinate_map,
    expand_keys,
    make_dilation_spec,
    pad_rows,
    patchify_close_query,
    regroup_close_query,
)
from dual_view_seg.verification import run_oracle


@pytest.mark.parametrize(
    "side, slice_size, density, adjusted, offsets",
    [
        (12, 5, 3, 15, (1, 3, 7)),
        (20, 5, 3, 20, (2, 5, 10)),
        (8, 4, 1, 8, (4,)),
        (12, 2, 3, 12, (1, 3, 6)),
    ],
)
def test_dilation_offsets(side, slice_size, density, adjusted, offsets):
    spec = make_dilation_spec(side, slice_size, density)
    assert spec.adjusted_side == adjusted
    assert spec.offsets == offsets


def test_bank_geometry():
    spec = make_dilation_spec(12, 5, 3)
    assert spec.n_slice == 3
    assert spec.group_count == 7
    assert spec.bank_width == 35
    assert spec.shifts == (0, 1, -1, 3, -3, 7, -7)


@pytest.mark.parametrize("side", range(1, 25))
@pytest.mark.parametrize("slice_size", [1, 2, 5])
@pytest.mark.parametrize("density", [1, 2, 3])
def test_offsets_are_ordered_and_bounded(side, slice_size, density):
    spec = make_dilation_spec(side, slice_size, density)
    offsets = spec.offsets
    assert all(a <= b for a, b in zip(offsets, offsets[1:]))
    assert max(offsets) <= spec.adjusted_side // 2
    if spec.adjusted_side >= 2**density:
        assert all(a < b for a, b in zip(offsets, offsets[1:]))


def test_invalid_geometry():
    with pytest.raises(ValueError):
        make_dilation_spec(0, 2, 2)
    with pytest.raises(ValueError):
        make_dilation_spec(4, 2, 0)


def test_key_bank_gathers_shifted_rows():
    spec = make_dilation_spec(8, 4, 2)
    ramp = (torch.arange(8.0) + 1)[None, None, :, None].expand(1, 1, 8, 8)

    bank = expand_keys(pad_rows(ramp, 8), spec)

    assert bank.shape == (1, 8, 2, spec.bank_width, 1)
    for row in range(8):
        for group, shift in enumerate(spec.shifts):
            source = row + shift
            expected = source + 1.0 if 0 <= source < 8 else 0.0
            cells = bank[0, row, :, group * 4 : (group + 1) * 4, 0]
            assert (cells == expected).all(), (row, shift)


def test_key_bank_keeps_slice_columns():
    spec = make_dilation_spec(4, 2, 1)
    columns = torch.arange(4.0)[None, None, None, :].expand(1, 1, 4, 4)

    bank = expand_keys(pad_rows(columns, 4), spec)

    assert bank[0, 1, 0, :2, 0].tolist() == [0.0, 1.0]
    assert bank[0, 1, 1, :2, 0].tolist() == [2.0, 3.0]


def test_key_bank_rejects_unpadded_maps():
    spec = make_dilation_spec(4, 2, 1)
    with pytest.raises(GridShapeError):
        expand_keys(torch.zeros(1, 1, 4, 4), spec)


def test_coordinate_map_range():
    grid = coordinate_map(5)
    assert grid.shape == (1, 2, 5, 5)
    axis = torch.tensor([-1.0, -0.5, 0.0, 0.5, 1.0])
    torch.testing.assert_close(grid[0, 0, 0], axis)
    torch.testing.assert_close(grid[0, 1, :, 0], axis)
    assert coordinate_map(1).abs().sum() == 0


def test_positional_encoding_shape():
    assert PositionalEncoding(6)(4).shape == (1, 6, 4, 4)


def test_joint_fusion_resizes_close():
    fusion = JointFusion(4)
    out = fusion(torch.randn(2, 4, 3, 3), torch.randn(2, 4, 6, 6))
    assert out.shape == (2, 4, 3, 3)


def test_collaborative_attention_shape_and_size_check():
    spec = make_dilation_spec(6, 3, 2)
    attention = CollaborativeDilatedAttention(4)
    position = PositionalEncoding(4)(6)
    feat, joint = torch.randn(2, 4, 6, 6), torch.randn(2, 4, 6, 6)

    assert attention(feat, joint, spec, position).shape == (2, 4, 6, 6)
    with pytest.raises(GridShapeError):
        attention(torch.randn(2, 4, 5, 5), joint, spec, position)


def test_transposed_pass_has_its_own_weights():
    attention = CollaborativeDilatedAttention(4)
    assert attention.vertical.query.weight is not attention.transposed.query.weight


def test_dilated_attention_matches_gather_oracle():
    result = run_oracle("cda", trials=6, seed=1)
    assert result.passed, result


def test_patchify_takes_strided_pixels():
    x = torch.arange(16.0).reshape(1, 1, 4, 4)

    patches = patchify_close_query(x, 2)

    assert patches.shape == (1, 4, 1, 2, 2)
    torch.testing.assert_close(patches[0, 1, 0], x[0, 0, 0::2, 1::2])
    torch.testing.assert_close(patches[0, 2, 0], x[0, 0, 1::2, 0::2])
    torch.testing.assert_close(regroup_close_query(patches, 2), x)


def test_patchify_rejects_indivisible_side():
    with pytest.raises(GridShapeError):
        patchify_close_query(torch.randn(1, 1, 5, 5), 2)


def test_enhancer_outputs_at_adjusted_side():
    enhancer = DilatedEnhancer(4, n_view=2, slice_size=3, density=2)
    remote, close = torch.randn(2, 4, 5, 5), torch.randn(2, 4, 10, 10)

    remote_out, close_out = enhancer(remote, close)

    assert remote_out.shape == (2, 4, 6, 6)
    assert close_out.shape == (2, 4, 4, 6, 6)


def test_enhancer_with_a_single_view():
    enhancer = DilatedEnhancer(4, n_view=2, slice_size=2, density=1)

    remote_out, close_out = enhancer(torch.randn(1, 4, 4, 4), None)
    assert remote_out.shape == (1, 4, 4, 4)
    assert close_out is None

    remote_out, close_out = enhancer(None, torch.randn(1, 4, 8, 8))
    assert remote_out is None
    assert close_out.shape == (1, 4, 4, 4, 4)

    with pytest.raises(ValueError):
        enhancer(None, None)
