"""Analytic multiply-accumulate, FLOP and parameter accounting.

Conventions: FLOPs = 2 * MACs for every convolution; pooling costs one op
per kernel tap per output element; batch norm two ops per element; ReLU one
op per element; channel shuffle is a free permutation.  A deformable
convolution costs its dense-conv MACs plus eight ops per bilinear sample
(its offset-predicting conv is a separate layer and is counted as a plain
conv).  Reports are a pure function of the configuration; weights are never
touched.

Reference totals published for this architecture family: the plain
ShuffleNet-SSD-512 baseline at 2.94 GFLOPs, the full detector at 3.8 GFLOPs,
and 28,642 default boxes per class for the original (unpublished)
tap/box assignment.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .config import NUM_TAPS, NetworkConfig, baseline_config
from .errors import ShapeError
from .network import LayerSpec, NetworkPlan, plan_network

PUBLISHED_BASELINE_GFLOPS = 2.94
PUBLISHED_FULL_GFLOPS = 3.8
PUBLISHED_BOXES_PER_CLASS = 28642

BILINEAR_OPS_PER_SAMPLE = 8


@dataclass(frozen=True)
class LayerCost:
    name: str
    kind: str
    macs: int
    flops: int
    params: int


def conv_cost(cin: int, cout: int, k: int, hout: int, wout: int,
              groups: int = 1, bias: bool = False, name: str = "conv") -> LayerCost:
    """Cost of one convolution: macs = Hout*Wout*Cout*(Cin/groups)*k^2."""
    if cin % groups != 0 or cout % groups != 0:
        raise ShapeError(f"channels ({cin}->{cout}) not divisible by groups={groups}")
    macs = hout * wout * cout * (cin // groups) * k * k
    params = cout * (cin // groups) * k * k + (cout if bias else 0)
    return LayerCost(name, "conv", macs, 2 * macs, params)


def depthwise_cost_ratio(out_channels: int, k: int) -> float:
    """Cost of a depthwise + pointwise pair relative to one dense k x k conv."""
    return 1.0 / out_channels + 1.0 / (k * k)


def layer_cost(spec: LayerSpec) -> LayerCost:
    """Cost of one planned layer under the conventions above."""
    out_elems = spec.cout * spec.hout * spec.wout
    if spec.kind in ("conv", "dwconv"):
        c = conv_cost(spec.cin, spec.cout, spec.k, spec.hout, spec.wout,
                      spec.groups, spec.bias, spec.name)
        return dataclasses.replace(c, kind=spec.kind)
    if spec.kind == "deform_conv":
        base = conv_cost(spec.cin, spec.cout, spec.k, spec.hout, spec.wout,
                         spec.groups, spec.bias, spec.name)
        samples = spec.cin * spec.k * spec.k * spec.hout * spec.wout
        return LayerCost(spec.name, spec.kind, base.macs,
                         base.flops + BILINEAR_OPS_PER_SAMPLE * samples,
                         base.params)
    if spec.kind == "bn":
        return LayerCost(spec.name, spec.kind, 0, 2 * out_elems, 4 * spec.cin)
    if spec.kind == "relu":
        return LayerCost(spec.name, spec.kind, 0, out_elems, 0)
    if spec.kind in ("maxpool", "avgpool"):
        return LayerCost(spec.name, spec.kind, 0,
                         out_elems * spec.k * spec.k, 0)
    if spec.kind == "shuffle":
        return LayerCost(spec.name, spec.kind, 0, 0, 0)
    raise ShapeError(f"unknown layer kind {spec.kind!r}")


@dataclass(frozen=True)
class FlopsReport:
    config: NetworkConfig
    layers: tuple[LayerCost, ...]
    total_macs: int
    total_flops: int
    total_params: int

    @property
    def gflops(self) -> float:
        return self.total_flops / 1e9

    def group_totals(self) -> dict[str, tuple[int, int, int]]:
        """(macs, flops, params) subtotals keyed by top-level name segment."""
        groups: dict[str, list[int]] = {}
        for c in self.layers:
            key = c.name.split(".", 1)[0]
            acc = groups.setdefault(key, [0, 0, 0])
            acc[0] += c.macs
            acc[1] += c.flops
            acc[2] += c.params
        return {k: tuple(v) for k, v in groups.items()}

    def layer_names(self) -> list[str]:
        return [c.name for c in self.layers]

    def to_dict(self) -> dict:
        return {
            "total_macs": self.total_macs,
            "total_flops": self.total_flops,
            "total_params": self.total_params,
            "gflops": self.gflops,
            "groups": {k: {"macs": m, "flops": f, "params": p}
                       for k, (m, f, p) in self.group_totals().items()},
            "layers": [dataclasses.asdict(c) for c in self.layers],
        }


def plan_cost(plan: NetworkPlan) -> FlopsReport:
    costs = tuple(layer_cost(s) for s in plan.layers)
    return FlopsReport(
        config=plan.cfg,
        layers=costs,
        total_macs=sum(c.macs for c in costs),
        total_flops=sum(c.flops for c in costs),
        total_params=sum(c.params for c in costs),
    )


def network_cost(cfg: NetworkConfig) -> FlopsReport:
    """Full per-layer cost report for a configuration."""
    return plan_cost(plan_network(cfg))


@dataclass(frozen=True)
class AblationRow:
    label: str
    dab_enabled: tuple[bool, ...]
    mincep_enabled: tuple[bool, ...]
    extra_layer_style: str
    gflops: float
    total_flops: int
    total_params: int


def ablation_table(cfgs: list[NetworkConfig],
                   labels: list[str] | None = None) -> list[AblationRow]:
    """One complexity row per configuration (no accuracy columns)."""
    if not cfgs:
        raise ShapeError("ablation table needs at least one config")
    labels = labels or [f"config-{i}" for i in range(len(cfgs))]
    rows = []
    for label, cfg in zip(labels, cfgs):
        rep = network_cost(cfg)
        rows.append(AblationRow(label, cfg.dab_enabled, cfg.mincep_enabled,
                                cfg.extra_layer_style, rep.gflops,
                                rep.total_flops, rep.total_params))
    return rows


def dab_grid_configs(base: NetworkConfig | None = None) -> tuple[list[NetworkConfig], list[str]]:
    """The 7-row DAB enablement grid: no DABs, then cumulatively enabling
    the six positions stage2, stage3, stage4, mincep-1..3."""
    base = base or NetworkConfig()
    cfgs, labels = [], []
    for k in range(7):
        flags = tuple(i < k for i in range(NUM_TAPS))
        cfgs.append(dataclasses.replace(base, dab_enabled=flags))
        labels.append("no DAB" if k == 0 else f"DAB x{k}")
    return cfgs, labels


def format_report(report: FlopsReport) -> str:
    """Aligned text table: per-group subtotals plus the network totals."""
    lines = [f"{'group':<12} {'MACs':>16} {'FLOPs':>16} {'params':>12}"]
    for key, (m, f, p) in report.group_totals().items():
        lines.append(f"{key:<12} {m:>16,} {f:>16,} {p:>12,}")
    lines.append(f"{'total':<12} {report.total_macs:>16,} "
                 f"{report.total_flops:>16,} {report.total_params:>12,}")
    lines.append(f"total GFLOPs: {report.gflops:.4f}")
    return "\n".join(lines)


def format_layer_table(report: FlopsReport) -> str:
    lines = [f"{'layer':<28} {'kind':<12} {'MACs':>14} {'FLOPs':>14} {'params':>10}"]
    for c in report.layers:
        lines.append(f"{c.name:<28} {c.kind:<12} {c.macs:>14,} "
                     f"{c.flops:>14,} {c.params:>10,}")
    return "\n".join(lines)


def complexity_summary(cfg: NetworkConfig | None = None) -> dict:
    """Totals for the given config and its plain baseline, with the
    published reference figures for comparison."""
    cfg = cfg or NetworkConfig()
    full = network_cost(cfg)
    base = network_cost(baseline_config(cfg))
    return {
        "full_gflops": full.gflops,
        "baseline_gflops": base.gflops,
        "delta_gflops": full.gflops - base.gflops,
        "full_params": full.total_params,
        "baseline_params": base.total_params,
        "published_full_gflops": PUBLISHED_FULL_GFLOPS,
        "published_baseline_gflops": PUBLISHED_BASELINE_GFLOPS,
    }
