import pytest
import torch

from dual_view_seg.errors import GridShapeError
from dual_view_seg.network.attention import MultiHeadSelfAttention
from dual_view_seg.network.backbone import (
    PatchEmbed,
    PatchMerging,
    VisionBackbone,
    window_self_attention,
)
from dual_view_seg.network.text_encoder import LanguageFeature


def _language(batch: int = 1) -> LanguageFeature:
    return LanguageFeature(torch.zeros(batch, 6, 8), torch.ones(batch, 6).bool())


def test_patch_embed_reduces_by_four():
    stem = PatchEmbed(8)
    assert stem(torch.randn(2, 3, 16, 12)).shape == (2, 8, 4, 3)


def test_patch_embed_projection_of_black_image_is_zero():
    stem = PatchEmbed(8)
    with torch.no_grad():
        stem.proj.bias.zero_()
        out = stem.proj(torch.zeros(1, 3, 8, 8))
    assert (out == 0).all()


def test_patch_embed_rejects_indivisible_images():
    with pytest.raises(GridShapeError):
        PatchEmbed(8)(torch.randn(1, 3, 10, 8))


def test_patch_merging():
    merge = PatchMerging(4, 6)
    assert merge(torch.randn(2, 4, 6, 6)).shape == (2, 6, 3, 3)
    with pytest.raises(GridShapeError):
        merge(torch.randn(1, 4, 3, 3))


def test_unit_window_attends_to_itself_only():
    attn = MultiHeadSelfAttention(4)
    x = torch.randn(2, 3, 3, 4)

    out = window_self_attention(attn, x, 1)

    alone, _ = attn(x.reshape(-1, 1, 4))
    torch.testing.assert_close(out, alone.reshape(2, 3, 3, 4))


def test_window_is_clipped_to_the_feature():
    attn = MultiHeadSelfAttention(4)
    x = torch.randn(1, 2, 2, 4)

    out = window_self_attention(attn, x, 7)

    full, _ = attn(x.reshape(1, 4, 4))
    torch.testing.assert_close(out, full.reshape(1, 2, 2, 4))


def test_padded_windows_ignore_padding():
    attn = MultiHeadSelfAttention(4)
    x = torch.randn(1, 5, 5, 4)

    out = window_self_attention(attn, x, 2)

    assert out.shape == (1, 5, 5, 4)
    corner, _ = attn(x[:, :2, :2].reshape(1, 4, 4))
    torch.testing.assert_close(out[:, :2, :2], corner.reshape(1, 2, 2, 4))
    edge, _ = attn(x[:, 4:, 4:].reshape(1, 1, 4))
    torch.testing.assert_close(out[:, 4:, 4:], edge.reshape(1, 1, 1, 4))
    strip, _ = attn(x[:, 4:, 2:4].reshape(1, 2, 4))
    torch.testing.assert_close(out[:, 4:, 2:4], strip.reshape(1, 1, 2, 4))


def test_pyramid_shapes(toy_cfg):
    backbone = VisionBackbone(toy_cfg)

    pyramid = backbone.forward_pyramid(torch.randn(3, 3, 32, 32), _language(3))

    for raw, enhanced, width, side in zip(
        pyramid.raw, pyramid.enhanced, toy_cfg.stage_channels, toy_cfg.stage_sides
    ):
        assert raw.shape == (3, width, side, side)
        assert enhanced is raw


def test_hooks_feed_the_next_stage(toy_cfg):
    backbone = VisionBackbone(toy_cfg)
    seen = []

    def zero_hook(v, language):
        seen.append(v.shape)
        return torch.zeros_like(v)

    images = torch.randn(1, 3, 32, 32)
    pyramid = backbone.forward_pyramid(
        images, _language(), [zero_hook, None, None, None]
    )

    assert seen == [(1, 8, 8, 8)]
    assert (pyramid.enhanced[0] == 0).all()
    expected = backbone.encode_stage(torch.zeros(1, 8, 8, 8), 1)
    torch.testing.assert_close(pyramid.raw[1], expected)
