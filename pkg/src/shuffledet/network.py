"""Detector graph: planning, building and running the full network.

The graph is planned once from a :class:`NetworkConfig` into an ordered list
of :class:`LayerSpec` records plus per-block structure.  The same plan drives
the forward pass, the weight manifest, and the analytic cost report, so there
is a single source of truth for every layer name and shape.

Topology: stage 1 is a 3x3/s2 conv into a 3x3/s2 max pool; stages 2..4 are
ShuffleNet units (first unit of each stage stride 2); stage 5 is a chain of
extra layers (modified-inception blocks, or 1x1 + 3x3/s2 conv pairs in the
plain variant).  Feature taps are taken after stage 2, 3, 4 and after each
enabled extra layer.  An enabled DAB enriches the leading channel portion of
its tap; the enriched slice replaces the original leading channels so the
tap width seen by the 3x3 loc/conf head convs is unchanged.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .blocks import (
    DabParams,
    MincepParams,
    ShuffleUnitParams,
    dab_block,
    dab_channels,
    dab_squeeze_channels,
    mincep_block,
    shuffle_unit,
    split_points,
)
from .config import NetworkConfig
from .errors import ConfigError, ShapeError, WeightShapeError, WeightsError, UnknownLayerError
from .ops import (
    BnParams,
    ConvParams,
    batch_norm,
    conv2d,
    conv_output_dim,
    max_pool,
    relu,
)
from .tensor import Tensor, concat_channels, slice_channels

BN_EPS = 1e-5
OFFSET_CHANNELS = 2 * 3 * 3      # (dy, dx) per tap of a 3x3 kernel
TAP_NAMES = ("stage2", "stage3", "stage4")


@dataclass(frozen=True)
class LayerSpec:
    """One compute node of the planned graph."""

    name: str
    kind: str                    # conv | dwconv | deform_conv | bn | relu | maxpool | avgpool | shuffle
    cin: int = 0
    cout: int = 0
    k: int = 0
    stride: int = 1
    pad: int = 0
    groups: int = 1
    hin: int = 0
    win: int = 0
    hout: int = 0
    wout: int = 0
    bias: bool = False


@dataclass(frozen=True)
class UnitPlan:
    name: str
    stride: int
    cin: int
    cout: int
    bottleneck: int
    branch_out: int
    groups: int


@dataclass(frozen=True)
class MincepPlan:
    name: str
    cin: int
    width: int
    splits: tuple[int, ...]      # boundaries, len 4
    branch_width: int


@dataclass(frozen=True)
class PlainExtraPlan:
    name: str
    cin: int
    width: int
    mid: int


@dataclass(frozen=True)
class DabPlan:
    name: str
    cin: int
    cprime: int
    squeeze: int
    portion: float


@dataclass(frozen=True)
class TapPlan:
    position: int                # 0..6 over (stage2..4, extra1..4)
    name: str
    channels: int
    h: int
    w: int
    boxes: int
    dab: DabPlan | None


@dataclass(frozen=True)
class NetworkPlan:
    cfg: NetworkConfig
    layers: tuple[LayerSpec, ...]
    stem_width: int
    units: tuple[tuple[UnitPlan, ...], ...]
    extras: tuple[object, ...]   # MincepPlan | PlainExtraPlan
    taps: tuple[TapPlan, ...]

    def layer_names(self) -> list[str]:
        return [s.name for s in self.layers]

    @property
    def tap_shapes(self) -> list[tuple[int, int]]:
        return [(t.h, t.w) for t in self.taps]


class _Planner:
    def __init__(self):
        self.layers: list[LayerSpec] = []

    def conv(self, name, cin, cout, k, stride, pad, h, w, groups=1, bias=False,
             kind="conv"):
        if cin % groups != 0 or cout % groups != 0:
            raise ConfigError(
                f"layer {name}: channels ({cin}->{cout}) not divisible by "
                f"groups={groups}"
            )
        ho = conv_output_dim(h, k, stride, pad)
        wo = conv_output_dim(w, k, stride, pad)
        if ho < 1 or wo < 1:
            raise ConfigError(f"layer {name}: empty output for input {h}x{w}")
        self.layers.append(LayerSpec(name, kind, cin, cout, k, stride, pad,
                                     groups, h, w, ho, wo, bias))
        return ho, wo

    def bn(self, name, c, h, w):
        self.layers.append(LayerSpec(name, "bn", c, c, hin=h, win=w, hout=h, wout=w))

    def relu(self, name, c, h, w):
        self.layers.append(LayerSpec(name, "relu", c, c, hin=h, win=w, hout=h, wout=w))

    def shuffle(self, name, c, h, w, groups):
        self.layers.append(LayerSpec(name, "shuffle", c, c, groups=groups,
                                     hin=h, win=w, hout=h, wout=w))

    def pool(self, name, kind, c, k, stride, pad, h, w):
        ho = conv_output_dim(h, k, stride, pad)
        wo = conv_output_dim(w, k, stride, pad)
        self.layers.append(LayerSpec(name, kind, c, c, k, stride, pad,
                                     hin=h, win=w, hout=ho, wout=wo))
        return ho, wo


def _plan_unit(p: _Planner, name: str, cin: int, cout: int, g: int,
               stride: int, h: int, w: int) -> tuple[UnitPlan, int, int]:
    bottleneck = cout // 4
    branch_out = cout - cin if stride == 2 else cout
    if stride == 1 and cin != cout:
        raise ConfigError(f"unit {name}: stride-1 unit needs Cin == Cout")
    if branch_out < 1:
        raise ConfigError(f"unit {name}: no branch channels left after concat")
    p.conv(f"{name}.gconv1", cin, bottleneck, 1, 1, 0, h, w, groups=g)
    p.bn(f"{name}.gconv1_bn", bottleneck, h, w)
    p.relu(f"{name}.relu1", bottleneck, h, w)
    p.shuffle(f"{name}.shuffle", bottleneck, h, w, g)
    ho, wo = p.conv(f"{name}.dwconv", bottleneck, bottleneck, 3, stride, 1,
                    h, w, groups=bottleneck, kind="dwconv")
    p.bn(f"{name}.dwconv_bn", bottleneck, ho, wo)
    p.conv(f"{name}.gconv2", bottleneck, branch_out, 1, 1, 0, ho, wo, groups=g)
    p.bn(f"{name}.gconv2_bn", branch_out, ho, wo)
    if stride == 2:
        p.pool(f"{name}.shortcut_pool", "avgpool", cin, 3, 2, 1, h, w)
    p.relu(f"{name}.out_relu", cout, ho, wo)
    return UnitPlan(name, stride, cin, cout, bottleneck, branch_out, g), ho, wo


def _plan_mincep(p: _Planner, name: str, cin: int, width: int,
                 h: int, w: int) -> tuple[MincepPlan, int, int]:
    pts = tuple(split_points(cin, 3))
    ca, cb, cc = pts[1] - pts[0], pts[2] - pts[1], pts[3] - pts[2]
    bw = width // 3
    ho, wo = p.pool(f"{name}.a_pool", "maxpool", ca, 3, 2, 1, h, w)
    p.conv(f"{name}.a_conv", ca, bw, 1, 1, 0, ho, wo)
    p.bn(f"{name}.a_bn", bw, ho, wo)
    p.relu(f"{name}.a_relu", bw, ho, wo)
    p.conv(f"{name}.b_conv", cb, bw, 1, 1, 0, h, w)
    p.bn(f"{name}.b_bn", bw, h, w)
    p.relu(f"{name}.b_relu", bw, h, w)
    p.conv(f"{name}.b_dw", bw, bw, 3, 2, 1, h, w, groups=bw, kind="dwconv")
    p.bn(f"{name}.b_dw_bn", bw, ho, wo)
    p.conv(f"{name}.c_conv", cc, bw, 1, 1, 0, h, w)
    p.bn(f"{name}.c_bn", bw, h, w)
    p.relu(f"{name}.c_relu", bw, h, w)
    p.conv(f"{name}.c_dw1", bw, bw, 3, 1, 1, h, w, groups=bw, kind="dwconv")
    p.bn(f"{name}.c_dw1_bn", bw, h, w)
    p.conv(f"{name}.c_dw2", bw, bw, 3, 2, 1, h, w, groups=bw, kind="dwconv")
    p.bn(f"{name}.c_dw2_bn", bw, ho, wo)
    p.conv(f"{name}.expand", 3 * bw, width, 1, 1, 0, ho, wo)
    p.bn(f"{name}.expand_bn", width, ho, wo)
    p.relu(f"{name}.expand_relu", width, ho, wo)
    return MincepPlan(name, cin, width, pts, bw), ho, wo


def _plan_plain_extra(p: _Planner, name: str, cin: int, width: int,
                      h: int, w: int) -> tuple[PlainExtraPlan, int, int]:
    mid = width // 2
    p.conv(f"{name}.reduce", cin, mid, 1, 1, 0, h, w)
    p.bn(f"{name}.reduce_bn", mid, h, w)
    p.relu(f"{name}.reduce_relu", mid, h, w)
    ho, wo = p.conv(f"{name}.conv", mid, width, 3, 2, 1, h, w)
    p.bn(f"{name}.conv_bn", width, ho, wo)
    p.relu(f"{name}.conv_relu", width, ho, wo)
    return PlainExtraPlan(name, cin, width, mid), ho, wo


def _plan_dab(p: _Planner, name: str, cin: int, portion: float,
              h: int, w: int) -> DabPlan:
    cp = dab_channels(cin, portion)
    sq = dab_squeeze_channels(cp)
    p.conv(f"{name}.offset_conv", cin, OFFSET_CHANNELS, 3, 1, 1, h, w, bias=True)
    p.conv(f"{name}.conv1", cp, sq, 1, 1, 0, h, w)
    p.bn(f"{name}.conv1_bn", sq, h, w)
    p.conv(f"{name}.dconv", sq, cp, 3, 1, 1, h, w, kind="deform_conv")
    p.bn(f"{name}.dconv_bn", cp, h, w)
    p.relu(f"{name}.out_relu", cp, h, w)
    return DabPlan(name, cin, cp, sq, portion)


def plan_network(cfg: NetworkConfig) -> NetworkPlan:
    """Walk the configured graph once, recording every layer and tap."""
    p = _Planner()
    g = cfg.groups
    size = cfg.input_size

    stem_width = cfg.stage_widths[0]
    h, w = p.conv("stem.conv", 3, stem_width, 3, 2, 1, size, size)
    p.bn("stem.bn", stem_width, h, w)
    p.relu("stem.relu", stem_width, h, w)
    h, w = p.pool("stem.pool", "maxpool", stem_width, 3, 2, 1, h, w)

    cin = stem_width
    stages: list[tuple[UnitPlan, ...]] = []
    raw_taps: list[tuple[str, int, int, int]] = []
    for si, (width, n_units) in enumerate(zip(cfg.stage_widths[1:], cfg.stage_units)):
        units = []
        for ui in range(n_units):
            stride = 2 if ui == 0 else 1
            unit, h, w = _plan_unit(p, f"{TAP_NAMES[si]}.u{ui}", cin, width,
                                    g, stride, h, w)
            units.append(unit)
            cin = width
        stages.append(tuple(units))
        raw_taps.append((TAP_NAMES[si], width, h, w))

    extras: list[object] = []
    for j in range(len(cfg.mincep_widths)):
        if not cfg.mincep_enabled[j]:
            continue
        width = cfg.mincep_widths[j]
        if cfg.extra_layer_style == "mincep":
            name = f"mincep{j + 1}"
            extra, h, w = _plan_mincep(p, name, cin, width, h, w)
        else:
            name = f"extra{j + 1}"
            extra, h, w = _plan_plain_extra(p, name, cin, width, h, w)
        extras.append(extra)
        raw_taps.append((name, width, h, w))
        cin = width

    # Tap positions index the fixed 7-slot schedule (stage2..4, extra1..4)
    # even when some extra layers are disabled.
    positions = [0, 1, 2] + [3 + j for j in range(len(cfg.mincep_widths))
                             if cfg.mincep_enabled[j]]
    taps: list[TapPlan] = []
    for pos, (name, channels, th, tw) in zip(positions, raw_taps):
        dab = None
        if cfg.dab_enabled[pos]:
            dab = _plan_dab(p, f"dab.{name}", channels, cfg.dab_portions[pos],
                            th, tw)
        b = cfg.boxes_per_location[pos]
        p.conv(f"head.{name}.loc", channels, b * 4, 3, 1, 1, th, tw, bias=True)
        p.conv(f"head.{name}.conf", channels, b * cfg.num_classes, 3, 1, 1,
               th, tw, bias=True)
        taps.append(TapPlan(pos, name, channels, th, tw, b, dab))

    return NetworkPlan(cfg, tuple(p.layers), stem_width, tuple(stages),
                       tuple(extras), tuple(taps))


def parameter_specs(plan: NetworkPlan) -> list[tuple[str, tuple[int, ...]]]:
    """Ordered (array name, shape) pairs for every stored parameter."""
    out: list[tuple[str, tuple[int, ...]]] = []
    for s in plan.layers:
        if s.kind in ("conv", "dwconv", "deform_conv"):
            out.append((f"{s.name}.weight", (s.cout, s.cin // s.groups, s.k, s.k)))
            if s.bias:
                out.append((f"{s.name}.bias", (s.cout,)))
        elif s.kind == "bn":
            for part in ("gamma", "beta", "mean", "var"):
                out.append((f"{s.name}.{part}", (s.cin,)))
    return out


def _name_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng([seed, zlib.crc32(name.encode())])


def random_parameters(plan: NetworkPlan, seed: int = 0) -> dict[str, np.ndarray]:
    """Deterministic Gaussian init; offset convs start at zero so deformable
    sampling initially matches the regular grid."""
    arrays: dict[str, np.ndarray] = {}
    for name, shape in parameter_specs(plan):
        if name.endswith(".weight"):
            if ".offset_conv." in name:
                arrays[name] = np.zeros(shape, np.float32)
            else:
                rng = _name_rng(seed, name)
                arrays[name] = rng.normal(0.0, 0.01, shape).astype(np.float32)
        elif name.endswith(".bias") or name.endswith(".beta") or name.endswith(".mean"):
            arrays[name] = np.zeros(shape, np.float32)
        else:  # gamma, var
            arrays[name] = np.ones(shape, np.float32)
    return arrays


def _resolve_parameters(plan: NetworkPlan, weights) -> dict[str, np.ndarray]:
    if isinstance(weights, (int, np.integer)):
        return random_parameters(plan, int(weights))
    mapping: Mapping[str, np.ndarray]
    if hasattr(weights, "arrays"):
        mapping = weights.arrays
    elif isinstance(weights, Mapping):
        mapping = weights
    else:
        raise WeightsError(f"cannot build from weights of type {type(weights)!r}")
    needed = parameter_specs(plan)
    arrays: dict[str, np.ndarray] = {}
    for name, shape in needed:
        if name not in mapping:
            raise WeightsError(f"missing weight array {name!r}")
        arr = np.asarray(mapping[name], dtype=np.float32)
        if tuple(arr.shape) != tuple(shape):
            raise WeightShapeError(
                f"array {name!r} has shape {tuple(arr.shape)}, expected {tuple(shape)}"
            )
        arrays[name] = arr
    extra = set(mapping) - {n for n, _ in needed}
    if extra:
        raise UnknownLayerError(
            f"weights contain arrays unknown to this config: {sorted(extra)[:5]}"
        )
    return arrays


@dataclass(frozen=True)
class HeadOutput:
    """Raw multibox head tensors for each tap, in tap order."""

    loc: tuple[Tensor, ...]           # (1, B*4, h, w) per tap
    conf: tuple[Tensor, ...]          # (1, B*classes, h, w) per tap
    tap_shapes: tuple[tuple[int, int], ...]
    boxes_per_location: tuple[int, ...]
    num_classes: int


class Network:
    """An immutable, executable ShuffleDet graph."""

    def __init__(self, plan: NetworkPlan, arrays: dict[str, np.ndarray]):
        self.plan = plan
        self.cfg = plan.cfg
        self.arrays = arrays
        self._build_runtime()

    def _conv(self, name: str, stride: int, pad: int, groups: int = 1) -> ConvParams:
        return ConvParams(
            weights=Tensor(self.arrays[f"{name}.weight"]),
            bias=self.arrays.get(f"{name}.bias"),
            stride=stride,
            pad=pad,
            groups=groups,
        )

    def _bn(self, name: str) -> BnParams:
        return BnParams(
            gamma=self.arrays[f"{name}.gamma"],
            beta=self.arrays[f"{name}.beta"],
            mean=self.arrays[f"{name}.mean"],
            var=self.arrays[f"{name}.var"],
            eps=BN_EPS,
        )

    def _build_runtime(self):
        g = self.cfg.groups
        self._stem_conv = self._conv("stem.conv", 2, 1)
        self._stem_bn = self._bn("stem.bn")

        self._units: list[list[ShuffleUnitParams]] = []
        for stage in self.plan.units:
            params = []
            for u in stage:
                params.append(ShuffleUnitParams(
                    gconv1=self._conv(f"{u.name}.gconv1", 1, 0, g),
                    bn1=self._bn(f"{u.name}.gconv1_bn"),
                    dwconv=self._conv(f"{u.name}.dwconv", u.stride, 1, u.bottleneck),
                    bn2=self._bn(f"{u.name}.dwconv_bn"),
                    gconv2=self._conv(f"{u.name}.gconv2", 1, 0, g),
                    bn3=self._bn(f"{u.name}.gconv2_bn"),
                    stride=u.stride,
                    groups=g,
                ))
            self._units.append(params)

        self._extras: list[tuple[str, object]] = []
        for e in self.plan.extras:
            if isinstance(e, MincepPlan):
                bw = e.branch_width
                params = MincepParams(
                    a_conv=self._conv(f"{e.name}.a_conv", 1, 0),
                    a_bn=self._bn(f"{e.name}.a_bn"),
                    b_conv=self._conv(f"{e.name}.b_conv", 1, 0),
                    b_bn=self._bn(f"{e.name}.b_bn"),
                    b_dw=self._conv(f"{e.name}.b_dw", 2, 1, bw),
                    b_dw_bn=self._bn(f"{e.name}.b_dw_bn"),
                    c_conv=self._conv(f"{e.name}.c_conv", 1, 0),
                    c_bn=self._bn(f"{e.name}.c_bn"),
                    c_dw1=self._conv(f"{e.name}.c_dw1", 1, 1, bw),
                    c_dw1_bn=self._bn(f"{e.name}.c_dw1_bn"),
                    c_dw2=self._conv(f"{e.name}.c_dw2", 2, 1, bw),
                    c_dw2_bn=self._bn(f"{e.name}.c_dw2_bn"),
                    expand=self._conv(f"{e.name}.expand", 1, 0),
                    expand_bn=self._bn(f"{e.name}.expand_bn"),
                )
                self._extras.append(("mincep", params))
            else:
                params = (
                    self._conv(f"{e.name}.reduce", 1, 0),
                    self._bn(f"{e.name}.reduce_bn"),
                    self._conv(f"{e.name}.conv", 2, 1),
                    self._bn(f"{e.name}.conv_bn"),
                )
                self._extras.append(("plain", params))

        self._dabs: list[DabParams | None] = []
        self._heads: list[tuple[ConvParams, ConvParams]] = []
        for t in self.plan.taps:
            if t.dab is not None:
                d = t.dab
                self._dabs.append(DabParams(
                    portion=d.portion,
                    offset_conv=self._conv(f"{d.name}.offset_conv", 1, 1),
                    conv1=self._conv(f"{d.name}.conv1", 1, 0),
                    bn1=self._bn(f"{d.name}.conv1_bn"),
                    dconv=self._conv(f"{d.name}.dconv", 1, 1),
                    bn2=self._bn(f"{d.name}.dconv_bn"),
                ))
            else:
                self._dabs.append(None)
            self._heads.append((
                self._conv(f"head.{t.name}.loc", 1, 1),
                self._conv(f"head.{t.name}.conf", 1, 1),
            ))

    def forward(self, image: Tensor) -> HeadOutput:
        """Run the network on one preprocessed image."""
        s = self.cfg.input_size
        if tuple(image.shape) != (1, 3, s, s):
            raise ShapeError(
                f"expected input shape (1, 3, {s}, {s}), got {tuple(image.shape)}"
            )
        x = relu(batch_norm(conv2d(image, self._stem_conv), self._stem_bn))
        x = max_pool(x, 3, 2, 1)

        raw_taps: list[Tensor] = []
        for stage in self._units:
            for unit in stage:
                x = shuffle_unit(x, unit)
            raw_taps.append(x)
        for style, params in self._extras:
            if style == "mincep":
                x = mincep_block(x, params)
            else:
                c1, b1, c2, b2 = params
                x = relu(batch_norm(conv2d(x, c1), b1))
                x = relu(batch_norm(conv2d(x, c2), b2))
            raw_taps.append(x)

        locs: list[Tensor] = []
        confs: list[Tensor] = []
        for tap, dab, (loc_conv, conf_conv) in zip(raw_taps, self._dabs, self._heads):
            feat = tap
            if dab is not None:
                enriched = dab_block(tap, dab)
                cp = enriched.shape.c
                if cp < tap.shape.c:
                    feat = concat_channels([enriched,
                                            slice_channels(tap, cp, tap.shape.c)])
                else:
                    feat = enriched
            locs.append(conv2d(feat, loc_conv))
            confs.append(conv2d(feat, conf_conv))

        return HeadOutput(
            loc=tuple(locs),
            conf=tuple(confs),
            tap_shapes=tuple((t.h, t.w) for t in self.plan.taps),
            boxes_per_location=tuple(t.boxes for t in self.plan.taps),
            num_classes=self.cfg.num_classes,
        )


def build_network(cfg: NetworkConfig, weights: "int | Mapping | object" = 0) -> Network:
    """Assemble an executable network.

    `weights` is either an integer seed for deterministic random
    initialization, or a weight store / mapping of named float32 arrays
    covering every parameter exactly.
    """
    plan = plan_network(cfg)
    arrays = _resolve_parameters(plan, weights)
    return Network(plan, arrays)


def forward(net: Network, image: Tensor) -> HeadOutput:
    return net.forward(image)


def flatten_head(head: HeadOutput) -> tuple[np.ndarray, np.ndarray]:
    """Flatten per-tap head tensors into per-prior rows.

    Returns (loc, conf) arrays of shape (N, 4) and (N, classes), ordered
    tap-major, then row-major over the tap grid, then box index: the same
    order the prior generator uses.
    """
    loc_rows = []
    conf_rows = []
    for loc, conf, b in zip(head.loc, head.conf, head.boxes_per_location):
        _, c4, h, w = loc.shape
        loc_rows.append(
            loc.data[0].reshape(b, 4, h, w).transpose(2, 3, 0, 1).reshape(-1, 4)
        )
        conf_rows.append(
            conf.data[0].reshape(b, head.num_classes, h, w)
            .transpose(2, 3, 0, 1).reshape(-1, head.num_classes)
        )
    return (np.concatenate(loc_rows).astype(np.float64),
            np.concatenate(conf_rows).astype(np.float64))


def _resize_bilinear(img: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of an (H, W, C) image, pixel centers aligned."""
    h, w = img.shape[:2]
    if (h, w) == (out_h, out_w):
        return img.astype(np.float32, copy=True)
    img = img.astype(np.float32)

    def axis_coords(n_in, n_out):
        pos = (np.arange(n_out, dtype=np.float64) + 0.5) * (n_in / n_out) - 0.5
        low = np.floor(pos)
        frac = (pos - low).astype(np.float32)
        i0 = np.clip(low, 0, n_in - 1).astype(np.int64)
        i1 = np.clip(low + 1, 0, n_in - 1).astype(np.int64)
        return i0, i1, frac

    y0, y1, fy = axis_coords(h, out_h)
    x0, x1, fx = axis_coords(w, out_w)
    rows = img[y0] * (1.0 - fy)[:, None, None] + img[y1] * fy[:, None, None]
    out = (rows[:, x0] * (1.0 - fx)[None, :, None]
           + rows[:, x1] * fx[None, :, None])
    return out.astype(np.float32)


def preprocess(image: np.ndarray, size: int = 512,
               mean: tuple[float, float, float] = (0.0, 0.0, 0.0)) -> Tensor:
    """Resize an (H, W, 3) RGB raster to size x size and scale to [0, 1].

    `mean` is subtracted per channel in raw pixel units before scaling.
    """
    arr = np.asarray(image)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ShapeError(f"expected an (H, W, 3) RGB image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeError("image has a zero dimension")
    resized = _resize_bilinear(arr, size, size)
    mean_arr = np.asarray(mean, np.float32).reshape(1, 1, 3)
    scaled = (resized - mean_arr) / np.float32(255.0)
    chw = scaled.transpose(2, 0, 1)[None]
    return Tensor._wrap(np.ascontiguousarray(chw, dtype=np.float32))
