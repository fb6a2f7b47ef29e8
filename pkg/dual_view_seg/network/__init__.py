"""Network modules of the dual-view segmenter"""

from dual_view_seg.network.attention import attend, multi_head_attend
from dual_view_seg.network.backbone import FeaturePyramid, VisionBackbone
from dual_view_seg.network.cross_view import (
    CrossViewWindowAttention,
    GateFusion,
    LanguageAligner,
    WindowGrid,
    exchange_close_to_remote,
    exchange_remote_to_close,
    merge_windows,
    partition_windows,
)
from dual_view_seg.network.decoder import CrossViewDecoder, DecoderState, predict_mask
from dual_view_seg.network.dilated import (
    DilatedEnhancer,
    DilationSpec,
    expand_keys,
    make_dilation_spec,
    patchify_close_query,
    regroup_close_query,
)
from dual_view_seg.network.segmenter import (
    DualViewSegmenter,
    count_params,
    count_params_by_module,
)
from dual_view_seg.network.text_encoder import (
    LanguageFeature,
    TextEncoder,
    tokens_to_tensors,
)

__all__ = [
    "attend",
    "multi_head_attend",
    "FeaturePyramid",
    "VisionBackbone",
    "CrossViewWindowAttention",
    "GateFusion",
    "LanguageAligner",
    "WindowGrid",
    "exchange_close_to_remote",
    "exchange_remote_to_close",
    "merge_windows",
    "partition_windows",
    "CrossViewDecoder",
    "DecoderState",
    "predict_mask",
    "DilatedEnhancer",
    "DilationSpec",
    "expand_keys",
    "make_dilation_spec",
    "patchify_close_query",
    "regroup_close_query",
    "DualViewSegmenter",
    "count_params",
    "count_params_by_module",
    "LanguageFeature",
    "TextEncoder",
    "tokens_to_tensors",
]
