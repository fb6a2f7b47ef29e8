"""Disk cache for generated synthetic samples"""

from hashlib import sha1
from logging import getLogger
from pathlib import Path

from diskcache import Cache

from dual_view_seg.config import CACHE_DIR, CACHE_EXPIRY_DAYS
from dual_view_seg.generators.scenes import SceneGenerator
from dual_view_seg.models import Sample, SceneSpec

logger = getLogger(__name__)


class SampleCache:
    """Disk-based cache of rendered scenes, keyed by seed and scene spec"""

    def __init__(self, cache_dir: Path = CACHE_DIR):
        self.cache_dir = cache_dir
        self.cache = Cache(str(cache_dir))
        self.expiry_seconds = CACHE_EXPIRY_DAYS * 24 * 60 * 60

    @staticmethod
    def key(seed: int, spec: SceneSpec) -> str:
        digest = sha1(spec.fingerprint().encode("utf-8")).hexdigest()[:16]
        return f"sample_{digest}_{seed}"

    def get_sample(self, seed: int, spec: SceneSpec) -> Sample:
        """Get a sample from the cache or render and store it"""
        cache_key = self.key(seed, spec)
        cached = self.cache.get(cache_key)
        if cached is not None:
            return Sample.model_validate(cached)

        sample = SceneGenerator(spec).generate(seed)
        try:
            self.cache.set(cache_key, sample.model_dump(), expire=self.expiry_seconds)
        except OSError as e:
            logger.warning(f"Could not cache sample {seed}: {e}")
        return sample

    def clear_cache(self) -> None:
        """Clear all cached samples"""
        self.cache.clear()

    def get_cache_size(self) -> int:
        """Get cache size in bytes"""
        return int(self.cache.volume())

    def close(self) -> None:
        self.cache.close()
