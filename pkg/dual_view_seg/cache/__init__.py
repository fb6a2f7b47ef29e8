"""Caching utilities"""

from dual_view_seg.cache.sample_cache import SampleCache

__all__ = ["SampleCache"]
