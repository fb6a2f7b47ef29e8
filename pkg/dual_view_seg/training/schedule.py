"""Polynomial learning-rate decay"""

from torch.optim import Optimizer


def poly_lr(base_lr: float, step: int, total_steps: int, power: float = 0.9) -> float:
    """lr0 * (1 - t / T) ** power, zero from step T on"""
    if total_steps <= 0:
        raise ValueError("total_steps must be > 0")
    progress = min(max(step, 0), total_steps) / total_steps
    return base_lr * (1.0 - progress) ** power


def set_lr(optimizer: Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr
