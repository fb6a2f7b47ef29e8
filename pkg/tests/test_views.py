import numpy as np
import pytest
import torch

from dual_view_seg.errors import GridShapeError
from dual_view_seg.generators import (
    SceneGenerator,
    assemble_grid,
    assemble_views,
    image_to_tensor,
    prepare_views,
    resize,
    split_grid,
    split_views,
)


def test_split_grid_is_row_major():
    full = np.arange(16).reshape(4, 4)

    tiles = split_grid(full, 2)

    assert tiles.shape == (4, 2, 2)
    np.testing.assert_array_equal(tiles[0], [[0, 1], [4, 5]])
    np.testing.assert_array_equal(tiles[1], [[2, 3], [6, 7]])
    np.testing.assert_array_equal(tiles[2], [[8, 9], [12, 13]])
    np.testing.assert_array_equal(assemble_grid(tiles), full)


def test_split_grid_keeps_leading_axes():
    full = torch.randn(3, 6, 6)
    tiles = split_grid(full, 3)
    assert tiles.shape == (9, 3, 2, 2)
    torch.testing.assert_close(tiles[4], full[:, 2:4, 2:4])


@pytest.mark.parametrize("n", [0, 3])
def test_split_grid_rejects_indivisible_sizes(n):
    with pytest.raises(GridShapeError):
        split_grid(np.zeros((4, 4)), n)


def test_assemble_grid_rejects_non_square_counts():
    with pytest.raises(GridShapeError):
        assemble_grid(np.zeros((3, 2, 2)))


def test_split_views_batches_patches_per_sample():
    x = torch.randn(2, 3, 8, 8)

    views = split_views(x, 2)

    assert views.shape == (2, 4, 3, 4, 4)
    torch.testing.assert_close(views[1, 3], x[1, :, 4:, 4:])
    torch.testing.assert_close(assemble_views(views, 2), x)


def test_resize_is_noop_at_matching_size():
    x = torch.randn(1, 2, 5, 5)
    assert resize(x, 5) is x
    assert resize(x, 10).shape == (1, 2, 10, 10)


def test_image_to_tensor_scales_to_unit_range():
    image = np.zeros((2, 3, 3), dtype=np.uint8)
    image[..., 1] = 255
    tensor = image_to_tensor(image)
    assert tensor.shape == (3, 2, 3)
    assert tensor[1].eq(1.0).all()
    assert tensor[0].eq(0.0).all()


def test_prepare_views_shapes(toy_cfg, scene_spec, vocab):
    sample = SceneGenerator(scene_spec).generate(0)

    bundle = prepare_views(sample, toy_cfg, vocab)

    side, n = toy_cfg.input_side, toy_cfg.n_view
    assert bundle.remote.shape == (3, side, side)
    assert bundle.close.shape == (n * n, 3, side, side)
    assert bundle.mask_full.shape == (n * side, n * side)
    assert set(bundle.mask_full.unique().tolist()) <= {0.0, 1.0}
    assert len(bundle.tokens) == toy_cfg.lang_len
    assert bundle.sample_id == sample.sample_id
    assert bundle.category == sample.meta.category


def test_close_patches_tile_the_enlarged_image(toy_cfg, scene_spec):
    sample = SceneGenerator(scene_spec).generate(1)
    bundle = prepare_views(sample, toy_cfg)

    enlarged = resize(image_to_tensor(sample.image)[None], toy_cfg.supervision_side)
    torch.testing.assert_close(assemble_grid(bundle.close), enlarged[0])
