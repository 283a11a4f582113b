"""Declarative network configuration and its JSON form.

A :class:`NetworkConfig` fully determines the detector graph: stage widths
and unit counts for the ShuffleNet backbone, the four stage-5 extra layers
(modified-inception or plain conv pairs), per-tap DAB toggles and channel
portions, boxes per location, and the prior-box scale range.  Unknown JSON
keys are rejected.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

EXTRA_STYLES = ("mincep", "plain")
NUM_EXTRA_LAYERS = 4
NUM_TAPS = 3 + NUM_EXTRA_LAYERS


@dataclass(frozen=True)
class NetworkConfig:
    input_size: int = 512
    groups: int = 3
    num_classes: int = 2                      # background + vehicle
    stage_widths: tuple[int, ...] = (24, 240, 480, 960)
    stage_units: tuple[int, ...] = (3, 7, 3)
    mincep_widths: tuple[int, ...] = (512, 256, 256, 256)
    mincep_enabled: tuple[bool, ...] = (True, True, True, True)
    extra_layer_style: str = "mincep"
    dab_enabled: tuple[bool, ...] = (True,) * NUM_TAPS
    dab_portions: tuple[float, ...] = (0.125, 0.125, 0.125, 0.25, 0.5, 0.5, 1.0)
    boxes_per_location: tuple[int, ...] = (4, 6, 6, 6, 4, 4, 4)
    s_min: float = 0.05
    s_max: float = 0.4
    pixel_mean: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        def as_tuple(name, value, kind):
            object.__setattr__(self, name, tuple(kind(v) for v in value))

        as_tuple("stage_widths", self.stage_widths, int)
        as_tuple("stage_units", self.stage_units, int)
        as_tuple("mincep_widths", self.mincep_widths, int)
        as_tuple("mincep_enabled", self.mincep_enabled, bool)
        as_tuple("dab_enabled", self.dab_enabled, bool)
        as_tuple("dab_portions", self.dab_portions, float)
        as_tuple("boxes_per_location", self.boxes_per_location, int)
        as_tuple("pixel_mean", self.pixel_mean, float)

        if self.input_size < 32:
            raise ConfigError(f"input_size must be >= 32, got {self.input_size}")
        if self.groups < 1:
            raise ConfigError("groups must be >= 1")
        if self.num_classes < 2:
            raise ConfigError("need at least background + one foreground class")
        if len(self.stage_widths) != 4:
            raise ConfigError("stage_widths must list 4 widths (stage1..stage4)")
        if len(self.stage_units) != 3:
            raise ConfigError("stage_units must list 3 counts (stages 2..4)")
        if any(u < 1 for u in self.stage_units):
            raise ConfigError("every stage needs at least one unit")
        if len(self.mincep_widths) != NUM_EXTRA_LAYERS:
            raise ConfigError(f"mincep_widths must list {NUM_EXTRA_LAYERS} widths")
        if len(self.mincep_enabled) != NUM_EXTRA_LAYERS:
            raise ConfigError(f"mincep_enabled must list {NUM_EXTRA_LAYERS} flags")
        if self.extra_layer_style not in EXTRA_STYLES:
            raise ConfigError(
                f"extra_layer_style must be one of {EXTRA_STYLES}, "
                f"got {self.extra_layer_style!r}"
            )
        for name, n in (("dab_enabled", NUM_TAPS), ("dab_portions", NUM_TAPS),
                        ("boxes_per_location", NUM_TAPS)):
            if len(getattr(self, name)) != n:
                raise ConfigError(f"{name} must list {n} entries (one per tap position)")
        for p in self.dab_portions:
            if not 0.0 < p <= 1.0:
                raise ConfigError(f"dab portion {p} outside (0, 1]")
        for b in self.boxes_per_location:
            if b not in (4, 6):
                raise ConfigError(f"boxes per location must be 4 or 6, got {b}")
        if not 0.0 < self.s_min < self.s_max <= 1.0:
            raise ConfigError("need 0 < s_min < s_max <= 1")
        if len(self.pixel_mean) != 3:
            raise ConfigError("pixel_mean must list 3 values (RGB)")

    @property
    def num_taps(self) -> int:
        return 3 + sum(self.mincep_enabled)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_json(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_json(cls, path: str | Path) -> "NetworkConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config JSON must be an object")
        return cls.from_dict(data)


def baseline_config(cfg: NetworkConfig | None = None) -> NetworkConfig:
    """The plain ShuffleNet-SSD variant: conv-pair extra layers, no DABs."""
    cfg = cfg or NetworkConfig()
    return dataclasses.replace(
        cfg,
        extra_layer_style="plain",
        dab_enabled=(False,) * NUM_TAPS,
    )
