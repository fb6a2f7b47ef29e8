import random

import numpy as np
import pytest
import torch

from dual_view_seg.config import (
    ModelConfig,
    TrainConfig,
    dump_settings,
    load_settings,
    parse_config_text,
    seed_all,
    validate_config,
)
from dual_view_seg.config.paths import DATA_DIR
from dual_view_seg.errors import ConfigError


def test_defaults_are_valid():
    assert validate_config(ModelConfig(), TrainConfig()) == []


def test_input_side_must_be_multiple_of_32():
    assert validate_config(ModelConfig(input_side=100)) == ["H mod 32 != 0"]


def test_loss_weights_must_sum_to_one():
    train = TrainConfig(dice_weight=0.5, bce_weight=0.1)
    assert validate_config(ModelConfig(), train) == ["weights do not sum to 1"]


@pytest.mark.parametrize(
    "changes, message",
    [
        ({"n_view": 0}, "n_view must be >= 1"),
        ({"dilation_density": 0}, "dilation_density (J) must be >= 1"),
        ({"slice_size": 0}, "slice_size must be >= 1"),
        (
            {"stage_channels": (8, 8, 16, 32)},
            "stage_channels must be strictly increasing",
        ),
        ({"cmp_channels": 0}, "cmp_channels must be >= 1"),
    ],
)
def test_violations_are_reported(changes, message):
    assert message in validate_config(ModelConfig(**changes))


def test_validation_collects_every_violation():
    violations = validate_config(ModelConfig(input_side=100, n_view=0, slice_size=0))
    assert len(violations) == 3


def test_compression_channels_default_to_half_of_last_stage():
    assert ModelConfig().compression_channels == 128
    assert ModelConfig(cmp_channels=7).compression_channels == 7


def test_stage_sides():
    assert ModelConfig().stage_sides == [96, 48, 24, 12]
    assert ModelConfig().supervision_side == 768


def test_tuple_fields_accept_comma_strings():
    cfg = ModelConfig(stage_channels="8, 16,32,64", win_size=3)
    assert cfg.stage_channels == (8, 16, 32, 64)
    assert cfg.win_size == (3, 3, 3, 3)


def test_parse_config_text_strips_comments():
    text = "# header\nlr = 0.1  # trailing\n\nepochs=3\n"
    assert parse_config_text(text) == {"lr": "0.1", "epochs": "3"}


def test_parse_config_text_rejects_bad_lines():
    with pytest.raises(ConfigError) as info:
        parse_config_text("lr = 1\nnot a pair\n")
    assert info.value.violations == ["line 2: expected 'key = value'"]


def test_load_settings_merges_file_then_overrides(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("input_side = 64\nepochs = 3\nlr = 0.01\n", encoding="utf-8")

    model, train = load_settings(path, {"epochs": "5"})

    assert model.input_side == 64
    assert train.epochs == 5
    assert train.lr == 0.01
    assert train.batch_size == TrainConfig().batch_size


def test_load_settings_reports_unknown_keys(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("colour = red\n", encoding="utf-8")
    with pytest.raises(ConfigError) as info:
        load_settings(path)
    assert info.value.violations == ["unknown key: colour"]


def test_load_settings_reports_invariant_violations():
    with pytest.raises(ConfigError) as info:
        load_settings(None, {"input_side": "100"})
    assert "H mod 32 != 0" in info.value.violations


def test_load_settings_reports_type_errors():
    with pytest.raises(ConfigError):
        load_settings(None, {"epochs": "many"})


def test_dump_settings_round_trips(tmp_path):
    model, train = ModelConfig(input_side=64), TrainConfig(max_steps=7)
    path = tmp_path / "dumped.cfg"
    path.write_text(dump_settings(model, train), encoding="utf-8")

    assert load_settings(path) == (model, train)


@pytest.mark.parametrize("name", ["default.cfg", "toy.cfg"])
def test_shipped_config_files_are_valid(name):
    model, train = load_settings(DATA_DIR / name)
    assert validate_config(model, train) == []


def test_configs_are_immutable():
    with pytest.raises(ValueError):
        ModelConfig().input_side = 64  # type: ignore[misc]


def test_seed_all_makes_random_sources_repeat():
    seed_all(3)
    first = (random.random(), np.random.rand(), torch.rand(1))
    seed_all(3)
    second = (random.random(), np.random.rand(), torch.rand(1))
    assert first[:2] == second[:2]
    assert torch.equal(first[2], second[2])


def test_seed_all_rejects_negative_seed():
    with pytest.raises(ValueError):
        seed_all(-1)
