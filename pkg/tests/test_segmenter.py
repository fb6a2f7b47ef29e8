import pytest
import torch

from dual_view_seg.config import DATA_DIR, load_settings
from dual_view_seg.errors import VariantNotImplementedError
from dual_view_seg.models import PRESETS, AblationSwitches
from dual_view_seg.network import (
    DualViewSegmenter,
    count_params,
    count_params_by_module,
)
from dual_view_seg.parsers import default_vocabulary

RUNNABLE = sorted(name for name in PRESETS if name != "arc")
TOY_CONFIG_PARAMS = 247_658


def _inputs(cfg, batch: int = 2):
    side, n = cfg.input_side, cfg.n_view
    remote = torch.rand(batch, 3, side, side)
    close = torch.rand(batch, n * n, 3, side, side)
    ids = torch.randint(2, 20, (batch, cfg.lang_len))
    mask = torch.ones(batch, cfg.lang_len, dtype=torch.bool)
    mask[:, 4:] = False
    return remote, close, ids, mask


def test_full_model_prediction(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab))

    state = model(*_inputs(toy_cfg))

    side = toy_cfg.supervision_side
    assert state.pred.shape == (2, 2, side, side)
    assert ((state.pred >= 0) & (state.pred <= 1)).all()
    torch.testing.assert_close(state.pred.sum(dim=1), torch.ones(2, side, side))


@pytest.mark.parametrize("variant", RUNNABLE)
def test_every_variant_predicts(toy_cfg, vocab, variant):
    model = DualViewSegmenter(toy_cfg, len(vocab), AblationSwitches.preset(variant))

    state = model(*_inputs(toy_cfg))

    side = toy_cfg.supervision_side
    assert state.pred.shape == (2, 2, side, side)
    assert torch.isfinite(state.pred).all()


def test_arc_decoder_is_not_implemented(toy_cfg, vocab):
    with pytest.raises(VariantNotImplementedError, match="arc decoder"):
        DualViewSegmenter(toy_cfg, len(vocab), AblationSwitches.preset("arc"))


def test_unknown_preset():
    with pytest.raises(ValueError):
        AblationSwitches.preset("no_such_variant")


def test_views_are_batched_remote_first(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab))
    remote, close, _, _ = _inputs(toy_cfg)

    stacked = model.stack_views(remote, close)

    assert stacked.shape[0] == 2 * 5
    torch.testing.assert_close(stacked[5], remote[1])
    torch.testing.assert_close(stacked[6], close[1, 0])


def test_samples_do_not_interact_in_eval(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab)).eval()
    remote, close, ids, mask = _inputs(toy_cfg)
    other_remote = remote.clone()
    other_remote[1] = torch.rand_like(remote[1])

    with torch.no_grad():
        first = model(remote, close, ids, mask).pred
        second = model(other_remote, close, ids, mask).pred

    torch.testing.assert_close(first[0], second[0])
    assert not torch.allclose(first[1], second[1])


def test_without_dilated_attention_the_top_feature_is_decoded(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab), AblationSwitches(cda_enabled=False))
    assert model.enhancer is None
    top = torch.randn(5, 20, 1, 1)
    assert model.bottleneck(top) is top


def test_dilated_bottleneck_uses_the_adjusted_side(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab))
    first = model.bottleneck(torch.randn(10, 20, 1, 1))
    assert first.shape == (10, 20, 2, 2)


def test_parameter_counts(toy_cfg, vocab):
    model = DualViewSegmenter(toy_cfg, len(vocab))

    per_module = count_params_by_module(model)

    assert count_params(model) == sum(per_module.values())
    assert set(per_module) == {"text", "backbone", "cross_view", "enhancer", "decoder"}
    assert all(count > 0 for count in per_module.values())


def test_toy_config_parameter_count_is_stable():
    model_cfg, _ = load_settings(DATA_DIR / "toy.cfg")

    first = DualViewSegmenter(model_cfg, len(default_vocabulary()))
    second = DualViewSegmenter(model_cfg, len(default_vocabulary()))

    assert count_params(first) == TOY_CONFIG_PARAMS
    assert count_params(second) == TOY_CONFIG_PARAMS


def test_wider_language_grows_only_language_maps(toy_cfg, vocab):
    wide_cfg = toy_cfg.model_copy(update={"lang_dim": 16})
    base = count_params_by_module(DualViewSegmenter(toy_cfg, len(vocab)))
    wide = count_params_by_module(DualViewSegmenter(wide_cfg, len(vocab)))

    delta = 16 - 8
    aligner_growth = sum(2 * 2 * c * delta for c in toy_cfg.stage_channels)
    assert wide["cross_view"] - base["cross_view"] == aligner_growth
    assert wide["text"] > base["text"]
    for name in ("backbone", "enhancer", "decoder"):
        assert wide[name] == base[name]
