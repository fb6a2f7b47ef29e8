from math import log

import pytest
import torch

from torch.optim import AdamW

from dual_view_seg.errors import GridShapeError
from dual_view_seg.network import DualViewSegmenter
from dual_view_seg.training import (
    SyntheticDataset,
    bce_loss,
    collate_views,
    dice_loss,
    total_loss,
)
from dual_view_seg.training.trainer import run_model


def test_dice_of_uniform_half_prediction():
    pred = torch.full((2, 2), 0.5, dtype=torch.float64)
    gt = torch.tensor([[1.0, 1.0], [0.0, 0.0]], dtype=torch.float64)
    assert float(dice_loss(pred, gt)) == pytest.approx(0.4)


def test_dice_is_averaged_per_sample():
    pred = torch.stack([torch.full((2, 2), 0.5), torch.tensor([[1.0, 1.0], [0, 0]])])
    gt = torch.tensor([[[1.0, 1.0], [0, 0]]]).expand(2, 2, 2)

    loss = dice_loss(pred, gt)

    assert float(loss) == pytest.approx((0.4 + 0.0) / 2)


def test_dice_of_empty_prediction_and_target_is_zero():
    zeros = torch.zeros(3, 3)
    assert float(dice_loss(zeros, zeros)) == 0.0


def test_bce_single_pixel():
    pred = torch.tensor([[0.25]], dtype=torch.float64)
    gt = torch.tensor([[1.0]], dtype=torch.float64)
    assert float(bce_loss(pred, gt)) == pytest.approx(-log(0.25), abs=1e-4)
    assert float(bce_loss(pred, gt)) == pytest.approx(1.3863, abs=1e-4)


def test_bce_clamps_certain_mistakes():
    pred = torch.tensor([[0.0, 1.0]], dtype=torch.float64)
    gt = torch.tensor([[1.0, 0.0]], dtype=torch.float64)
    loss = bce_loss(pred, gt)
    assert torch.isfinite(loss)
    assert float(loss) == pytest.approx(-log(1e-7), rel=1e-6)


def test_perfect_prediction_has_near_zero_loss():
    gt = torch.zeros(1, 4, 4, dtype=torch.float64)
    gt[0, :2] = 1.0
    pred = torch.stack([1 - gt, gt], dim=1)

    terms = total_loss(pred, gt)

    assert float(terms.dice) == pytest.approx(0.0)
    assert float(terms.total) == pytest.approx(0.0, abs=1e-6)


def test_total_loss_weights_dice_and_bce():
    fg = torch.full((1, 2, 2), 0.5, dtype=torch.float64)
    pred = torch.stack([1 - fg, fg], dim=1)
    gt = torch.zeros(1, 2, 2, dtype=torch.float64)

    terms = total_loss(pred, gt)

    assert float(terms.bce) == pytest.approx(log(2))
    assert float(terms.dice) == pytest.approx(1 - 1 / 3)
    assert float(terms.total) == pytest.approx(0.9 * (2 / 3) + 0.1 * log(2))


def test_weights_of_unit_dice_and_ln2_bce():
    assert 0.9 * 1.0 + 0.1 * log(2) == pytest.approx(0.9693, abs=1e-4)


def test_custom_weights():
    fg = torch.full((1, 2, 2), 0.5, dtype=torch.float64)
    pred = torch.stack([1 - fg, fg], dim=1)
    gt = torch.ones(1, 2, 2, dtype=torch.float64)

    terms = total_loss(pred, gt, dice_weight=0.0, bce_weight=1.0)

    torch.testing.assert_close(terms.total, terms.bce)


def test_shape_mismatch():
    with pytest.raises(GridShapeError):
        dice_loss(torch.zeros(2, 2), torch.zeros(3, 3))
    with pytest.raises(GridShapeError):
        bce_loss(torch.zeros(2, 2), torch.zeros(2, 3))


def test_loss_falls_while_fitting_one_sample(toy_cfg, toy_train_cfg, scene_spec, vocab):
    batch = collate_views([SyntheticDataset([7], toy_cfg, scene_spec, vocab)[0]])
    model = DualViewSegmenter(toy_cfg, len(vocab))
    optimizer = AdamW(model.parameters(), lr=toy_train_cfg.lr)

    losses = []
    for _ in range(51):
        loss = total_loss(run_model(model, batch), batch.mask).total
        optimizer.zero_grad()
        loss.backward()
        optimizer.step()
        losses.append(loss.item())

    falls = sum(after < before for before, after in zip(losses, losses[1:]))
    assert falls >= 48
    assert losses[-1] < losses[0]
