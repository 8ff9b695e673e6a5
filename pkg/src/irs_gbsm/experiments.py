"""Ensemble orchestration for the ACF, CCF, delay-spread and path-loss runs.

Ensemble members are split into fixed-size chunks; each chunk derives its
members' seeds from the master seed, so results do not depend on how many
worker processes evaluate the chunks.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .config import ScenarioConfig
from .fading import (
    build_scene,
    child_seed,
    draw_link_delays,
    realize,
    scenario_link,
)
from .geometry import ArrayGeometry, element_position
from .irs_control import IrsGeometryView, build_phase_matrix, received_power
from .stats import (
    CorrelationAccumulator,
    CorrelationCurve,
    ds_cdf,
    link_acf_ana,
    rms_delay_spread,
    spatial_ccf_ana,
    time_acf_ana,
)

log = logging.getLogger(__name__)

CHUNK = 512
# seed-stream keys
_SNAPSHOT, _MEMBER = 1, 2


def resolve_workers(workers: int) -> int:
    return workers if workers > 0 else (os.cpu_count() or 1)


def map_chunks(fn, args, n_members: int, workers: int = 1) -> list:
    """Evaluate ``fn(args, start, stop)`` over fixed chunks, results in chunk order."""
    bounds = [(s, min(s + CHUNK, n_members)) for s in range(0, n_members, CHUNK)]
    workers = min(resolve_workers(workers), len(bounds)) if bounds else 1
    if workers <= 1:
        return [fn(args, a, b) for a, b in bounds]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(fn, args, a, b) for a, b in bounds]
        return [f.result() for f in futures]


def reduce_accumulators(parts, n_lags: int) -> CorrelationAccumulator:
    acc = CorrelationAccumulator.empty(n_lags)
    for p in parts:
        acc = acc.merge(p)
    return acc


def _clusters(cfg: ScenarioConfig):
    return None if cfg.run.cluster < 0 else [cfg.run.cluster]


def _hops(cfg: ScenarioConfig, channel: str):
    """(sub-channel, tx index, rx index) of each hop of an ACF channel."""
    r = cfg.run
    if channel == "irs":
        return [("bi", r.bs_index, r.irs_index), ("iu", r.irs_index, r.ue_index)]
    return [("bu", r.bs_index, r.ue_index)]


def _check_cluster(link, cluster) -> None:
    if cluster is not None and cluster[0] >= link.n_clusters:
        raise ValueError(f"run.cluster={cluster[0]} but link {link.name} has {link.n_clusters} clusters")


def irs_phase(cfg: ScenarioConfig, carrier: float | None = None) -> float:
    """Reflection phase of the selected IRS element for BS-origin to UE-origin."""
    scene = build_scene(cfg, carrier)
    view = IrsGeometryView.from_positions(
        scene.irs, scene.bs.origin, scene.ue.origin, scene.wavelength, cfg.channel.irs_dx, cfg.channel.irs_dy
    )
    return float(build_phase_matrix(view).phases[cfg.run.irs_index])


@dataclass
class _AcfTask:
    cfg: ScenarioConfig
    channel: str
    times: np.ndarray
    series: list
    links: list
    phase: float


def _acf_chunk(task: _AcfTask, start: int, stop: int) -> CorrelationAccumulator:
    cfg, run = task.cfg, task.cfg.run
    clusters = _clusters(cfg)
    hops = _hops(cfg, task.channel)
    acc = CorrelationAccumulator.empty(task.times.size)
    if run.ensemble_mode == "snapshot":
        draws = [[] for _ in task.links]
        for i in range(start, stop):
            rng = np.random.default_rng(child_seed(run.seed, _MEMBER, i))
            for k, link in enumerate(task.links):
                draws[k].append(draw_link_delays(link, rng))
        h = np.exp(1j * task.phase) * np.ones((stop - start, task.times.size), dtype=complex)
        for series, d in zip(task.series, draws):
            h = h * series.narrowband_batch(np.stack(d), run.frequency, clusters)[:, :, 0, 0]
        return acc.add(h)
    for i in range(start, stop):
        seed = child_seed(run.seed, _MEMBER, i)
        h = np.exp(1j * task.phase) * np.ones(task.times.size, dtype=complex)
        for sub, tx, rx in hops:
            link = scenario_link(cfg, sub, seed)
            if clusters is not None and clusters[0] >= link.n_clusters:
                # the selected cluster does not exist in this draw
                h = h * 0.0
                continue
            h = h * realize(link, task.times, [tx], [rx]).narrowband(run.frequency, clusters)[:, 0, 0]
        acc.add(h[None])
    return acc


@dataclass
class AcfResult:
    t0: float
    channel: str
    sim: CorrelationCurve
    ana: CorrelationCurve
    bound: np.ndarray


def lag_grid(cfg: ScenarioConfig) -> np.ndarray:
    return np.linspace(0.0, cfg.run.lag_max, cfg.run.lag_num)


def compute_acf(cfg: ScenarioConfig, t0: float, channel: str = "irs", ensemble=None, workers=None) -> AcfResult:
    """Simulated and analytical time ACF at reference time ``t0``."""
    run = cfg.run
    ensemble = run.ensemble if ensemble is None else ensemble
    workers = run.workers if workers is None else workers
    lags = lag_grid(cfg)
    times = t0 + lags
    clusters = _clusters(cfg)
    snap = child_seed(run.seed, _SNAPSHOT)
    links, series, ana_hops = [], [], []
    for sub, tx, rx in _hops(cfg, channel):
        link = scenario_link(cfg, sub, snap)
        _check_cluster(link, clusters)
        links.append(link)
        series.append(realize(link, times, [tx], [rx]))
        ana_hops.append(link_acf_ana(link, tx, rx, times, run.frequency, clusters))
    phase = irs_phase(cfg) if channel == "irs" else 0.0
    task = _AcfTask(cfg, channel, times, series, links, phase)
    acc = reduce_accumulators(map_chunks(_acf_chunk, task, ensemble, workers), lags.size)
    meta = dict(t0=t0, channel=channel)
    ana = CorrelationCurve(lags, time_acf_ana(ana_hops), meta)
    return AcfResult(t0, channel, acc.curve(lags, **meta), ana, acc.cauchy_schwarz_bound())


@dataclass
class _CcfTask:
    cfg: ScenarioConfig
    link: object
    series: object
    columns: np.ndarray
    side: str


def _ccf_chunk(task: _CcfTask, start: int, stop: int) -> CorrelationAccumulator:
    run = task.cfg.run
    clusters = _clusters(task.cfg)
    draws = []
    for i in range(start, stop):
        rng = np.random.default_rng(child_seed(run.seed, _MEMBER, i))
        draws.append(draw_link_delays(task.link, rng))
    h = task.series.narrowband_batch(np.stack(draws), run.frequency, clusters)[:, 0]
    h = h[:, 0, :] if task.side == "tx" else h[:, :, 0]
    return CorrelationAccumulator.empty(task.columns.size).add(h[:, task.columns])


@dataclass
class CcfResult:
    carrier: float
    lag_index: np.ndarray
    lag_m: np.ndarray
    sim: CorrelationCurve
    ana: CorrelationCurve
    bound: np.ndarray


def ccf_lags(cfg: ScenarioConfig, link) -> tuple[str, int, int, np.ndarray]:
    """Swept side, reference index, fixed opposite index and lag indices."""
    run = cfg.run
    sub = run.ccf_subchannel
    tx_idx = {"bi": run.bs_index, "iu": run.irs_index, "bu": run.bs_index}[sub]
    rx_idx = {"bi": run.irs_index, "iu": run.ue_index, "bu": run.ue_index}[sub]
    side = "tx" if link.tx.size > 1 else "rx"
    array, ref, other = (link.tx, tx_idx, rx_idx) if side == "tx" else (link.rx, rx_idx, tx_idx)
    available = array.size - 1 - ref
    max_lag = run.ccf_max_lag if run.ccf_max_lag >= 0 else available
    if max_lag > available:
        raise ValueError(
            f"run.ccf_max_lag={max_lag} exceeds the array extent: at most {available} elements "
            f"({available * array.spacing_x:.6g} m) from reference element {ref}"
        )
    return side, ref, other, np.arange(max_lag + 1)


def compute_ccf(cfg: ScenarioConfig, carrier: float | None = None, ensemble=None, workers=None) -> CcfResult:
    run = cfg.run
    carrier = cfg.carrier_frequency if carrier is None else carrier
    ensemble = run.ensemble if ensemble is None else ensemble
    workers = run.workers if workers is None else workers
    clusters = _clusters(cfg)
    t0 = float(run.times[0])
    link = scenario_link(cfg, run.ccf_subchannel, child_seed(run.seed, _SNAPSHOT), carrier)
    _check_cluster(link, clusters)
    side, ref, other, lags = ccf_lags(cfg, link)
    array = link.tx if side == "tx" else link.rx
    cols = ref + lags
    if side == "tx":
        series = realize(link, [t0], None, [other])
    else:
        series = realize(link, [t0], [other], None)
    task = _CcfTask(cfg, link, series, cols, side)
    acc = reduce_accumulators(map_chunks(_ccf_chunk, task, ensemble, workers), cols.size)
    ana = spatial_ccf_ana(link, side, ref, cols, t0, run.frequency, other, clusters)
    step = np.linalg.norm(element_position(array, 1) - element_position(array, 0)) if array.size > 1 else 0.0
    meta = dict(carrier=carrier, side=side)
    return CcfResult(
        carrier, lags, lags * step, acc.curve(lags, **meta), CorrelationCurve(lags, ana, meta),
        acc.cauchy_schwarz_bound(),
    )


def _ds_chunk(cfg: ScenarioConfig, start: int, stop: int) -> np.ndarray:
    run = cfg.run
    t0 = float(run.times[0])
    out = np.empty((len(run.spread_scales), stop - start))
    for i in range(start, stop):
        seed = child_seed(run.seed, _MEMBER, i)
        for k, scale in enumerate(run.spread_scales):
            total = 0.0
            for sub, tx, rx in _hops(cfg, "irs"):
                # identical seed across scales: paired realisations
                s = realize(scenario_link(cfg, sub, seed, spread_scale=scale), [t0], [tx], [rx])
                vis = s.mask[0, 0]
                total += rms_delay_spread(s.nlos_power[0, 0, 0][vis], s.geometric_delay[0, 0, 0][vis])
            out[k, i - start] = total
    return out


def compute_ds(cfg: ScenarioConfig, ensemble=None, workers=None) -> np.ndarray:
    """Cascaded RMS delay spread samples, shape ``(len(spread_scales), ensemble)``."""
    run = cfg.run
    ensemble = run.ensemble if ensemble is None else ensemble
    workers = run.workers if workers is None else workers
    return np.concatenate(map_chunks(_ds_chunk, cfg, ensemble, workers), axis=1)


def _centred_irs(scene, n: int):
    irs = scene.irs
    sized = ArrayGeometry(
        "planar", n, n, irs.spacing_x, irs.spacing_y,
        irs.azimuth_x, irs.elevation_x, irs.azimuth_y, irs.elevation_y, irs.origin,
    )
    centre = (n - 1) / 2 * (irs.spacing_x * sized.axis_x + irs.spacing_y * sized.axis_y)
    return sized.with_origin(irs.origin - centre)


def compute_pathloss(cfg: ScenarioConfig) -> tuple[list, list]:
    """Rows of the IRS-size sweep and of the distance sweep."""
    scene = build_scene(cfg)
    lam = scene.wavelength
    p_t = 10 ** ((cfg.run.transmit_power_dbm - 30) / 10)
    bs, ue, irs_c = scene.bs.origin, scene.ue.origin, scene.irs.origin
    dx = cfg.channel.irs_dx or scene.irs.spacing_x
    dy = cfg.channel.irs_dy or scene.irs.spacing_y

    def row(n, tx, rx):
        irs = _centred_irs(scene, n)
        view = IrsGeometryView.from_positions(irs, tx, rx, lam, dx, dy)
        pr = received_power(p_t, view, build_phase_matrix(view))
        d_bi, d_iu = np.linalg.norm(tx - irs_c), np.linalg.norm(rx - irs_c)
        single = dx * dy * lam**2 / (64 * np.pi**3 * (d_bi * d_iu) ** 2)
        return [
            n, n * n, d_bi, d_iu, cfg.run.transmit_power_dbm,
            10 * np.log10(pr) + 30, 10 * np.log10(pr / p_t),
            10 * np.log10(single), 10 * np.log10(single * (n * n) ** 2),
        ]

    sizes = [row(n, bs, ue) for n in cfg.run.pathloss_sizes]
    n_ref = cfg.run.pathloss_sizes[-1] if cfg.run.pathloss_sizes else 1
    dist = [
        row(n_ref, irs_c + s * (bs - irs_c), irs_c + s * (ue - irs_c)) for s in cfg.run.pathloss_distance_scales
    ]
    return sizes, dist


# ---------------------------------------------------------------- output


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.12e}"


def write_table(path: Path, header: dict, columns: list, units: list, rows) -> Path:
    lines = [f"# tool: irs-gbsm {__version__}"]
    lines += [f"# {k}: {v}" for k, v in header.items()]
    lines.append("# columns: " + " ".join(columns))
    lines.append("# units: " + " ".join(units))
    lines += [" ".join(_fmt(v) for v in r) for r in rows]
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(lines) + "\n")
    return path


def _header(cfg: ScenarioConfig, experiment: str, **extra) -> dict:
    c, ch = cfg.clusters, cfg.channel
    h = {
        "experiment": experiment,
        "scenario": cfg.name,
        "config_hash": cfg.digest(),
        "seed": cfg.run.seed,
        "ensemble": f"{cfg.run.ensemble} ({cfg.run.ensemble_mode})",
        "carrier_hz": _fmt(cfg.carrier_frequency),
        "rician_bi_iu_bu": f"{ch.rician_bi:g} {ch.rician_iu:g} {ch.rician_bu:g}",
        "rays_per_cluster": c.rays,
        "birth_death_rates": f"{c.birth_rate:g} {c.death_rate:g}",
        "correlation_distance_m": f"{c.correlation_distance:g}",
        "spread_m": " ".join(f"{s:g}" for s in c.spread),
        "pdp_decay_s": f"{c.pdp_decay:g}",
        "link_delay_mean_s": f"{c.link_delay_mean:g}",
        "evolution_mode": c.mode,
    }
    h.update(extra)
    return h


def _warn_small(cfg: ScenarioConfig) -> None:
    if cfg.run.ensemble < 2:
        log.warning("ensemble size %d: estimator variance is undefined", cfg.run.ensemble)


def run_acf(cfg: ScenarioConfig, out_dir) -> list[Path]:
    _warn_small(cfg)
    out_dir = Path(out_dir)
    paths = []
    for channel in cfg.run.acf_channels:
        for t0 in cfg.run.times:
            res = compute_acf(cfg, float(t0), channel)
            sim, ana = res.sim, res.ana
            rows = zip(
                sim.lags, sim.values.real, sim.values.imag, sim.magnitude,
                ana.values.real, ana.values.imag, ana.magnitude,
                sim.raw.real, sim.raw.imag, ana.raw.real, ana.raw.imag,
            )
            name = f"acf_{cfg.name}_{channel}_t{float(t0):g}s.dat"
            paths.append(write_table(
                out_dir / name,
                _header(cfg, "acf", channel=channel, t0_s=_fmt(t0), cluster=cfg.run.cluster),
                ["lag", "sim_re", "sim_im", "sim_abs", "ana_re", "ana_im", "ana_abs",
                 "sim_raw_re", "sim_raw_im", "ana_raw_re", "ana_raw_im"],
                ["s"] + ["1"] * 10,
                rows,
            ))
    return paths


def run_ccf(cfg: ScenarioConfig, out_dir) -> list[Path]:
    _warn_small(cfg)
    out_dir = Path(out_dir)
    paths = []
    for carrier in cfg.run.carriers or [cfg.carrier_frequency]:
        res = compute_ccf(cfg, carrier)
        sim, ana = res.sim, res.ana
        rows = zip(
            res.lag_index, res.lag_m, sim.values.real, sim.values.imag, sim.magnitude,
            ana.values.real, ana.values.imag, ana.magnitude,
        )
        name = f"ccf_{cfg.name}_{carrier / 1e9:g}GHz.dat"
        paths.append(write_table(
            out_dir / name,
            _header(cfg, "ccf", ccf_carrier_hz=_fmt(carrier), subchannel=cfg.run.ccf_subchannel),
            ["lag_index", "lag", "sim_re", "sim_im", "sim_abs", "ana_re", "ana_im", "ana_abs"],
            ["1", "m", "1", "1", "1", "1", "1", "1"],
            rows,
        ))
    return paths


def run_ds_cdf(cfg: ScenarioConfig, out_dir) -> list[Path]:
    if cfg.run.ensemble < 100:
        raise ValueError(f"run.ensemble={cfg.run.ensemble}: delay-spread CDF needs at least 100 realisations")
    out_dir = Path(out_dir)
    samples = compute_ds(cfg)
    paths = []
    for scale, ds in zip(cfg.run.spread_scales, samples):
        values, probs = ds_cdf(ds)
        name = f"ds_cdf_{cfg.name}_spread{scale:g}.dat"
        paths.append(write_table(
            out_dir / name,
            _header(cfg, "ds-cdf", spread_scale=f"{scale:g}", median_s=_fmt(np.median(ds))),
            ["delay_spread", "cdf"], ["s", "1"], zip(values, probs),
        ))
    return paths


def run_pathloss(cfg: ScenarioConfig, out_dir) -> list[Path]:
    out_dir = Path(out_dir)
    sizes, dist = compute_pathloss(cfg)
    cols = ["m", "elements", "d_bi", "d_iu", "p_t", "p_r", "pl_biu", "pl_single_closed", "pl_coherent_ideal"]
    units = ["1", "1", "m", "m", "dBm", "dBm", "dB", "dB", "dB"]
    return [
        write_table(out_dir / f"pathloss_{cfg.name}_size.dat", _header(cfg, "pathloss", sweep="irs size"), cols, units, sizes),
        write_table(out_dir / f"pathloss_{cfg.name}_distance.dat", _header(cfg, "pathloss", sweep="distance"), cols, units, dist),
    ]
