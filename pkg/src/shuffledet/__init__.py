"""CPU inference engine and analysis toolkit for the ShuffleDet detector."""

from .analysis import (
    FlopsReport,
    LayerCost,
    ablation_table,
    conv_cost,
    depthwise_cost_ratio,
    network_cost,
)
from .config import NetworkConfig, baseline_config
from .metrics import EvalSummary, evaluate_ap, evaluate_counts
from .network import (
    HeadOutput,
    Network,
    build_network,
    flatten_head,
    forward,
    plan_network,
    preprocess,
)
from .ops import (
    BnParams,
    ConvParams,
    avg_pool,
    batch_norm,
    channel_shuffle,
    conv2d,
    deformable_conv2d,
    depthwise_conv2d,
    max_pool,
    relu,
)
from .pipeline import detect
from .postprocess import (
    Detection,
    TileWindow,
    iou,
    merge_tiles,
    nms,
    plan_tiles,
    run_postprocess,
)
from .priors import (
    LossReport,
    MatchResult,
    PriorBox,
    PriorSet,
    decode_box,
    encode_box,
    generate_priors,
    match_priors,
    multibox_loss,
)
from .tensor import Shape4, Tensor, concat_channels, slice_channels, tensor_new
from .weights import WeightStore, load_weights, random_weights, save_weights

__version__ = "0.1.0"
