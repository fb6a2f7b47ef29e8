"""Synthetic scene generation and dual-view preparation"""

from dual_view_seg.generators.scenes import (
    SceneGenerator,
    describe,
    discriminating_attributes,
    generate_sample,
    position_tag,
    resolve_expression,
)
from dual_view_seg.generators.views import (
    assemble_grid,
    assemble_views,
    image_to_tensor,
    prepare_image_views,
    prepare_views,
    resize,
    split_grid,
    split_views,
)

__all__ = [
    "SceneGenerator",
    "assemble_grid",
    "assemble_views",
    "describe",
    "discriminating_attributes",
    "generate_sample",
    "image_to_tensor",
    "position_tag",
    "prepare_image_views",
    "prepare_views",
    "resize",
    "resolve_expression",
    "split_grid",
    "split_views",
]
