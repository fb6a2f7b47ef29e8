import numpy as np
import pytest

from dual_view_seg.cache import SampleCache
from dual_view_seg.generators import SceneGenerator


@pytest.fixture
def cache(tmp_path):
    cache = SampleCache(tmp_path / "cache")
    yield cache
    cache.close()


def test_cached_sample_matches_generated(cache, scene_spec):
    fresh = SceneGenerator(scene_spec).generate(3)

    first = cache.get_sample(3, scene_spec)
    second = cache.get_sample(3, scene_spec)

    for sample in (first, second):
        assert sample.expression == fresh.expression
        np.testing.assert_array_equal(sample.image, fresh.image)
        np.testing.assert_array_equal(sample.mask, fresh.mask)
    assert second.meta.objects == fresh.meta.objects


def test_second_lookup_does_not_render(cache, scene_spec, monkeypatch):
    cache.get_sample(5, scene_spec)

    def fail(self, seed, sample_id=None):
        raise AssertionError("rendered again")

    monkeypatch.setattr(SceneGenerator, "generate", fail)
    assert cache.get_sample(5, scene_spec).sample_id == "synth_000005"


def test_key_depends_on_seed_and_spec(scene_spec):
    other = scene_spec.model_copy(update={"tiny_fraction": 0.9})
    assert SampleCache.key(1, scene_spec) != SampleCache.key(2, scene_spec)
    assert SampleCache.key(1, scene_spec) != SampleCache.key(1, other)
    assert SampleCache.key(1, scene_spec) == SampleCache.key(1, scene_spec)


def test_clear_cache(cache, scene_spec):
    cache.get_sample(0, scene_spec)
    assert cache.get_cache_size() > 0

    cache.clear_cache()

    assert cache.cache.get(SampleCache.key(0, scene_spec)) is None
