"""Scenario configuration: dataclasses, TOML loading, validation and presets."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import sys
import typing
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from .clusters import MODES, ClusterLayout, EvolutionParams
from .geometry import SPEED_OF_LIGHT

PRESETS = ("fig5", "fig6", "fig7", "fig8")
SUBCHANNELS = ("bi", "iu", "bu")


class ConfigError(ValueError):
    """Invalid scenario configuration; the message names the offending field."""


@dataclass
class ArrayConfig:
    kind: str = "linear"
    n_x: int = 1
    n_y: int = 1
    # None means half a wavelength at the scenario carrier
    spacing_x: typing.Optional[float] = None
    spacing_y: typing.Optional[float] = None
    azimuth_x_deg: float = 0.0
    elevation_x_deg: float = 0.0
    azimuth_y_deg: float = 90.0
    elevation_y_deg: float = 0.0

    @property
    def size(self) -> int:
        return self.n_x * self.n_y


@dataclass
class GeometryConfig:
    bs_position: list = field(default_factory=lambda: [0.0, 0.0, 0.0])
    irs_position: list = field(default_factory=lambda: [100.0, 0.0, 0.0])
    ue_position: list = field(default_factory=lambda: [100.0, 200.0, 0.0])
    bs_array: ArrayConfig = field(default_factory=ArrayConfig)
    irs_array: ArrayConfig = field(
        default_factory=lambda: ArrayConfig(
            kind="planar", n_x=2, n_y=2, azimuth_x_deg=90.0, azimuth_y_deg=0.0, elevation_y_deg=90.0
        )
    )
    ue_array: ArrayConfig = field(default_factory=ArrayConfig)


@dataclass
class MotionConfig:
    bs_speed: float = 10.0
    bs_heading_deg: float = 0.0
    ue_speed: float = 10.0
    ue_heading_deg: float = 90.0
    cluster_speed: float = 0.0
    cluster_heading_deg: float = 0.0


@dataclass
class ClusterConfig:
    birth_rate: float = 80.0
    death_rate: float = 4.0
    correlation_distance: float = 10.0
    rays: int = 20
    spread: list = field(default_factory=lambda: [2.0, 2.0, 1.0])
    link_delay_mean: float = 50e-9
    pdp_decay: float = 100e-9
    distance_fraction: list = field(default_factory=lambda: [0.1, 0.45])
    azimuth_spread_deg: float = 40.0
    elevation_spread_deg: float = 10.0
    mode: str = "corrected"

    def evolution(self) -> EvolutionParams:
        return EvolutionParams(self.birth_rate, self.death_rate, self.correlation_distance, self.mode)

    def layout(self, motion: MotionConfig, spread_scale: float = 1.0) -> ClusterLayout:
        return ClusterLayout(
            rays=self.rays,
            spread=tuple(spread_scale * s for s in self.spread),
            link_delay_mean=self.link_delay_mean,
            distance_fraction=tuple(self.distance_fraction),
            azimuth_spread=float(np.deg2rad(self.azimuth_spread_deg)),
            elevation_spread=float(np.deg2rad(self.elevation_spread_deg)),
            speed=motion.cluster_speed,
            heading=float(np.deg2rad(motion.cluster_heading_deg) % (2 * np.pi)),
        )


@dataclass
class ChannelConfig:
    rician_bi: float = 0.0
    rician_iu: float = 0.0
    rician_bu: float = 0.0
    shadowing_std_db: float = 0.0
    enable_irs: bool = True
    enable_direct: bool = True
    # IRS spacing terms of the received-power expression; None -> IRS spacing
    irs_dx: typing.Optional[float] = None
    irs_dy: typing.Optional[float] = None
    steering_doppler: float = 0.0

    def rician(self, sub: str) -> float:
        return {"bi": self.rician_bi, "iu": self.rician_iu, "bu": self.rician_bu}[sub]


@dataclass
class RunConfig:
    seed: int = 0
    ensemble: int = 10000
    ensemble_mode: str = "snapshot"
    workers: int = 0
    frequency: float = 0.0
    bs_index: int = 0
    irs_index: int = 0
    ue_index: int = 0
    # -1 selects every visible cluster
    cluster: int = -1
    times: list = field(default_factory=lambda: [0.0])
    lag_max: float = 5e-3
    lag_num: int = 101
    acf_channels: list = field(default_factory=lambda: ["irs"])
    ccf_subchannel: str = "bu"
    # -1 sweeps to the end of the array
    ccf_max_lag: int = -1
    carriers: list = field(default_factory=list)
    spread_scales: list = field(default_factory=lambda: [1.0])
    pathloss_sizes: list = field(default_factory=lambda: [1, 2, 4, 8, 16, 32, 64])
    pathloss_distance_scales: list = field(default_factory=lambda: [0.25, 0.5, 1.0, 2.0, 4.0])
    transmit_power_dbm: float = 30.0


@dataclass
class ScenarioConfig:
    name: str = "custom"
    carrier_frequency: float = 62e9
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    motion: MotionConfig = field(default_factory=MotionConfig)
    clusters: ClusterConfig = field(default_factory=ClusterConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    run: RunConfig = field(default_factory=RunConfig)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_frequency

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Short hash of the scenario; the worker count does not affect results and is left out."""
        data = self.to_dict()
        data["run"].pop("workers")
        blob = json.dumps(data, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def replace(self, **sections) -> "ScenarioConfig":
        """Copy with dotted overrides, e.g. ``replace(**{"run.seed": 3})``."""
        data = self.to_dict()
        for key, value in sections.items():
            node = data
            *parents, leaf = key.split(".")
            for p in parents:
                node = node[p]
            if leaf not in node:
                raise ConfigError(f"{key}: unknown field")
            node[leaf] = value
        return from_dict(data)


def _coerce(tp, value, path):
    origin = typing.get_origin(tp)
    if origin is typing.Union:
        args = [a for a in typing.get_args(tp) if a is not type(None)]
        if value is None:
            return None
        return _coerce(args[0], value, path)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{path}: expected a table")
        return _build(tp, value, path)
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if tp is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        return list(value)
    return value


def _build(cls, data: dict, path: str = ""):
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        where = f"{path}." if path else ""
        raise ConfigError(f"{where}{unknown[0]}: unknown field")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        kwargs[name] = _coerce(hints[name], value, sub)
    return cls(**kwargs)


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {msg}")


def _numbers(values, path, n=None):
    _require(all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in values), path, "expected numbers")
    if n is not None:
        _require(len(values) == n, path, f"expected {n} values")


def _validate_array(a: ArrayConfig, path: str) -> None:
    _require(a.kind in ("linear", "planar"), f"{path}.kind", "must be 'linear' or 'planar'")
    _require(a.n_x >= 1, f"{path}.n_x", "must be >= 1")
    _require(a.n_y >= 1, f"{path}.n_y", "must be >= 1")
    if a.kind == "linear":
        _require(a.n_y == 1, f"{path}.n_y", "must be 1 for a linear array")
    for name in ("spacing_x", "spacing_y"):
        v = getattr(a, name)
        _require(v is None or v > 0, f"{path}.{name}", "must be positive")


def validate(cfg: ScenarioConfig) -> ScenarioConfig:
    """Check every module precondition; raise :class:`ConfigError` on the first violation."""
    _require(cfg.carrier_frequency > 0, "carrier_frequency", "must be positive")
    g = cfg.geometry
    for name in ("bs_position", "irs_position", "ue_position"):
        _numbers(getattr(g, name), f"geometry.{name}", 3)
    for name in ("bs_array", "irs_array", "ue_array"):
        _validate_array(getattr(g, name), f"geometry.{name}")
    _require(g.bs_array.kind == "linear", "geometry.bs_array.kind", "BS array must be linear")
    _require(g.ue_array.kind == "linear", "geometry.ue_array.kind", "UE array must be linear")
    for axis in ("n_x", "n_y"):
        n = getattr(g.irs_array, axis)
        _require(n == 1 or n % 2 == 0, f"geometry.irs_array.{axis}", "IRS element counts must be even (or 1)")
    pos = {k: np.asarray(getattr(g, k + "_position"), float) for k in ("bs", "irs", "ue")}
    _require(np.linalg.norm(pos["bs"] - pos["irs"]) > 0, "geometry.irs_position", "coincides with the BS")
    _require(np.linalg.norm(pos["ue"] - pos["irs"]) > 0, "geometry.ue_position", "coincides with the IRS")
    _require(np.linalg.norm(pos["ue"] - pos["bs"]) > 0, "geometry.ue_position", "coincides with the BS")

    m = cfg.motion
    for name in ("bs_speed", "ue_speed", "cluster_speed"):
        _require(getattr(m, name) >= 0, f"motion.{name}", "must be non-negative")

    c = cfg.clusters
    _require(c.birth_rate > 0, "clusters.birth_rate", "must be positive")
    _require(c.death_rate > 0, "clusters.death_rate", "must be positive")
    _require(c.correlation_distance > 0, "clusters.correlation_distance", "must be positive")
    _require(c.rays >= 1, "clusters.rays", "must be >= 1")
    _numbers(c.spread, "clusters.spread", 3)
    _require(all(s > 0 for s in c.spread), "clusters.spread", "standard deviations must be positive")
    _require(c.link_delay_mean >= 0, "clusters.link_delay_mean", "must be non-negative")
    _require(c.pdp_decay > 0, "clusters.pdp_decay", "must be positive")
    _numbers(c.distance_fraction, "clusters.distance_fraction", 2)
    lo, hi = c.distance_fraction
    _require(0 < lo <= hi < 1, "clusters.distance_fraction", "must satisfy 0 < lo <= hi < 1")
    _require(c.mode in MODES, "clusters.mode", f"must be one of {MODES}")

    ch = cfg.channel
    for sub in SUBCHANNELS:
        _require(ch.rician(sub) >= 0, f"channel.rician_{sub}", "must be non-negative")
    _require(ch.shadowing_std_db >= 0, "channel.shadowing_std_db", "must be non-negative")
    for name in ("irs_dx", "irs_dy"):
        v = getattr(ch, name)
        _require(v is None or v > 0, f"channel.{name}", "must be positive")

    r = cfg.run
    _require(r.seed >= 0, "run.seed", "must be non-negative")
    _require(r.ensemble >= 1, "run.ensemble", "must be >= 1")
    _require(r.ensemble_mode in ("snapshot", "full"), "run.ensemble_mode", "must be 'snapshot' or 'full'")
    _require(r.workers >= 0, "run.workers", "must be >= 0")
    _require(0 <= r.bs_index < g.bs_array.size, "run.bs_index", f"must lie in [0, {g.bs_array.size})")
    _require(0 <= r.irs_index < g.irs_array.size, "run.irs_index", f"must lie in [0, {g.irs_array.size})")
    _require(0 <= r.ue_index < g.ue_array.size, "run.ue_index", f"must lie in [0, {g.ue_array.size})")
    _require(r.cluster >= -1, "run.cluster", "must be -1 (all) or a cluster id")
    _numbers(r.times, "run.times")
    _require(len(r.times) >= 1 and all(t >= 0 for t in r.times), "run.times", "need non-negative times")
    _require(r.lag_max >= 0, "run.lag_max", "must be non-negative")
    _require(r.lag_num >= 1, "run.lag_num", "must be >= 1")
    _require(
        len(r.acf_channels) >= 1 and all(x in ("irs", "direct") for x in r.acf_channels),
        "run.acf_channels", "entries must be 'irs' or 'direct'",
    )
    _require(r.ccf_subchannel in SUBCHANNELS, "run.ccf_subchannel", f"must be one of {SUBCHANNELS}")
    _require(r.ccf_max_lag >= -1, "run.ccf_max_lag", "must be -1 (full extent) or non-negative")
    _numbers(r.carriers, "run.carriers")
    _require(all(f > 0 for f in r.carriers), "run.carriers", "must be positive")
    _numbers(r.spread_scales, "run.spread_scales")
    _require(len(r.spread_scales) >= 1 and all(s > 0 for s in r.spread_scales), "run.spread_scales", "must be positive")
    _require(
        all(isinstance(s, int) and s >= 1 and (s == 1 or s % 2 == 0) for s in r.pathloss_sizes),
        "run.pathloss_sizes", "sizes must be 1 or even integers",
    )
    _numbers(r.pathloss_distance_scales, "run.pathloss_distance_scales")
    _require(all(s > 0 for s in r.pathloss_distance_scales), "run.pathloss_distance_scales", "must be positive")
    return cfg


def from_dict(data: dict) -> ScenarioConfig:
    return validate(_build(ScenarioConfig, data))


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return from_dict(data)


def preset(name: str) -> ScenarioConfig:
    if name not in PRESETS:
        raise ConfigError(f"preset: unknown preset {name!r}; choose from {PRESETS}")
    text = resources.files(__package__).joinpath("presets", f"{name}.toml").read_text()
    return from_dict(tomllib.loads(text))
