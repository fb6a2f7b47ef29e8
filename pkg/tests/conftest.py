"""Shared fixtures: a toy model configuration and small synthetic scenes"""

import pytest
import torch

from dual_view_seg.config import ModelConfig, TrainConfig
from dual_view_seg.models import SceneSpec
from dual_view_seg.parsers import Vocabulary, default_vocabulary


@pytest.fixture
def toy_cfg() -> ModelConfig:
    return ModelConfig(
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


@pytest.fixture
def toy_train_cfg() -> TrainConfig:
    return TrainConfig(
        lr=1e-3,
        epochs=2,
        batch_size=2,
        train_samples=4,
        val_samples=2,
        scene_side=128,
    )


@pytest.fixture
def scene_spec() -> SceneSpec:
    return SceneSpec(image_side=128, max_objects=3)


@pytest.fixture
def vocab() -> Vocabulary:
    return default_vocabulary()


@pytest.fixture(autouse=True)
def _seeded() -> None:
    torch.manual_seed(0)
