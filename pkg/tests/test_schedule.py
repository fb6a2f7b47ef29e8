import pytest
import torch
from torch.optim import AdamW

from dual_view_seg.training import poly_lr
from dual_view_seg.training.schedule import set_lr


def test_poly_lr_endpoints():
    assert poly_lr(1e-3, 0, 100) == pytest.approx(1e-3)
    assert poly_lr(1e-3, 100, 100) == 0.0
    assert poly_lr(1e-3, 150, 100) == 0.0


def test_poly_lr_midpoint():
    assert poly_lr(2.0, 50, 100, power=0.9) == pytest.approx(2.0 * 0.5**0.9)
    assert poly_lr(2.0, 25, 100, power=1.0) == pytest.approx(1.5)


def test_poly_lr_decreases():
    rates = [poly_lr(1.0, step, 10) for step in range(11)]
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_poly_lr_requires_steps():
    with pytest.raises(ValueError):
        poly_lr(1.0, 0, 0)


def test_set_lr_updates_every_group():
    first, second = torch.nn.Linear(2, 2), torch.nn.Linear(2, 2)
    optimizer = AdamW(
        [{"params": first.parameters()}, {"params": second.parameters(), "lr": 1.0}]
    )
    set_lr(optimizer, 0.25)
    assert [group["lr"] for group in optimizer.param_groups] == [0.25, 0.25]
