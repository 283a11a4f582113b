"""Composite architecture blocks.

ShuffleNet units (stride 1 residual add, stride 2 pooled concat), the
modified-inception extra layer ("mincep"), and the deformation-adaptation
block ("DAB") that enriches a slice of a feature map with a deformable
convolution before the detection head.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ShapeError
from .ops import (
    BnParams,
    ConvParams,
    add,
    avg_pool,
    batch_norm,
    channel_shuffle,
    conv2d,
    deformable_conv2d,
    depthwise_conv2d,
    max_pool,
    relu,
)
from .tensor import Tensor, concat_channels, slice_channels


def split_points(c: int, parts: int) -> list[int]:
    """Near-equal channel split boundaries: [0, ..., c], len parts+1."""
    return [(i * c) // parts for i in range(parts + 1)]


@dataclass(frozen=True)
class ShuffleUnitParams:
    gconv1: ConvParams        # 1x1 grouped bottleneck
    bn1: BnParams
    dwconv: ConvParams        # 3x3 depthwise, stride 1 or 2
    bn2: BnParams
    gconv2: ConvParams        # 1x1 grouped expand
    bn3: BnParams
    stride: int
    groups: int

    def __post_init__(self):
        if self.stride not in (1, 2):
            raise ShapeError(f"shuffle unit stride must be 1 or 2, got {self.stride}")


def shuffle_unit(x: Tensor, p: ShuffleUnitParams) -> Tensor:
    """Residual bottleneck unit.

    Branch: 1x1 grouped conv -> BN -> ReLU -> channel shuffle -> 3x3
    depthwise (carries the stride) -> BN -> 1x1 grouped conv -> BN.
    Stride 1 merges with an identity shortcut by addition; stride 2
    concatenates a 3x3/s2 average-pooled shortcut.  ReLU after the merge.
    """
    b = relu(batch_norm(conv2d(x, p.gconv1), p.bn1))
    b = channel_shuffle(b, p.groups)
    b = batch_norm(depthwise_conv2d(b, p.dwconv), p.bn2)
    b = batch_norm(conv2d(b, p.gconv2), p.bn3)
    if p.stride == 1:
        return relu(add(x, b))
    shortcut = avg_pool(x, k=3, stride=2, pad=1)
    return relu(concat_channels([shortcut, b]))


@dataclass(frozen=True)
class MincepParams:
    """Three-branch reduction block, stride 2 overall.

    Input channels are split near-equally across the branches:
      (a) 3x3/s2 max pool -> 1x1 conv
      (b) 1x1 conv -> 3x3/s2 depthwise
      (c) 1x1 conv -> 3x3/s1 depthwise -> 3x3/s2 depthwise
    Branch outputs (width//3 channels each) are concatenated and a final
    1x1 conv expands them to the block width.
    """

    a_conv: ConvParams
    a_bn: BnParams
    b_conv: ConvParams
    b_bn: BnParams
    b_dw: ConvParams
    b_dw_bn: BnParams
    c_conv: ConvParams
    c_bn: BnParams
    c_dw1: ConvParams
    c_dw1_bn: BnParams
    c_dw2: ConvParams
    c_dw2_bn: BnParams
    expand: ConvParams
    expand_bn: BnParams


def mincep_block(x: Tensor, p: MincepParams) -> Tensor:
    c = x.shape.c
    pts = split_points(c, 3)
    xa = slice_channels(x, pts[0], pts[1])
    xb = slice_channels(x, pts[1], pts[2])
    xc = slice_channels(x, pts[2], pts[3])

    a = max_pool(xa, k=3, stride=2, pad=1)
    a = relu(batch_norm(conv2d(a, p.a_conv), p.a_bn))

    b = relu(batch_norm(conv2d(xb, p.b_conv), p.b_bn))
    b = batch_norm(depthwise_conv2d(b, p.b_dw), p.b_dw_bn)

    cbr = relu(batch_norm(conv2d(xc, p.c_conv), p.c_bn))
    cbr = batch_norm(depthwise_conv2d(cbr, p.c_dw1), p.c_dw1_bn)
    cbr = batch_norm(depthwise_conv2d(cbr, p.c_dw2), p.c_dw2_bn)

    merged = concat_channels([a, b, cbr])
    return relu(batch_norm(conv2d(merged, p.expand), p.expand_bn))


@dataclass(frozen=True)
class DabParams:
    """Deformation-adaptation block over the leading `portion` of channels.

    With C' = portion * C input channels consumed: a 1x1 conv squeezes to
    ceil(C'/5) channels, a 3x3 deformable conv restores C' channels, and the
    result is merged with the consumed slice by a residual add.  The offset
    field is predicted by a plain 3x3 conv over the full block input.
    """

    portion: float
    offset_conv: ConvParams
    conv1: ConvParams
    bn1: BnParams
    dconv: ConvParams
    bn2: BnParams


def dab_channels(c: int, portion: float) -> int:
    """Number of channels consumed by a DAB with the given input portion."""
    raw = c * portion
    cp = round(raw)
    if cp < 1 or abs(raw - cp) > 1e-6:
        raise ShapeError(
            f"portion {portion} of {c} channels is not a whole number >= 1"
        )
    return cp


def dab_squeeze_channels(cprime: int) -> int:
    """Width of the 1x1 squeeze conv inside a DAB."""
    return -(-cprime // 5)


def dab_block(x: Tensor, p: DabParams) -> Tensor:
    c = x.shape.c
    cp = dab_channels(c, p.portion)
    xs = slice_channels(x, 0, cp) if cp < c else x
    offsets = conv2d(x, p.offset_conv)
    t = batch_norm(conv2d(xs, p.conv1), p.bn1)
    t = batch_norm(deformable_conv2d(t, offsets, p.dconv), p.bn2)
    return relu(add(xs, t))
