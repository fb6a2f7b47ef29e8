"""Parsers for manifests, rasters and expressions"""

from dual_view_seg.parsers.manifest import ManifestParser, load_sample
from dual_view_seg.parsers.masks import read_image, read_mask, write_image, write_mask
from dual_view_seg.parsers.vocabulary import (
    PAD_ID,
    UNK_ID,
    Vocabulary,
    default_vocabulary,
    tokenize,
)

__all__ = [
    "PAD_ID",
    "UNK_ID",
    "ManifestParser",
    "Vocabulary",
    "default_vocabulary",
    "load_sample",
    "read_image",
    "read_mask",
    "tokenize",
    "write_image",
    "write_mask",
]
