"""Small-scale fading: twin-cluster NLoS taps, LoS tap and Rician mixing.

A :class:`Link` holds everything random about one sub-channel (cluster
geometry, visibility, virtual-link delays). :func:`realize` turns it into a
:class:`ChannelRealizationSeries` on a time grid without further randomness.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .clusters import (
    ClusterLayout,
    EvolutionParams,
    TwinCluster,
    VisibilityTensor,
    draw_link_delay,
    evolve_array,
    generate_twin_cluster,
    ray_powers,
)
from .config import ArrayConfig, ScenarioConfig
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    Trajectory,
    displacement,
    element_positions,
)

SUBCHANNELS = ("bi", "iu", "bu")
_STREAM = {"bi": 1, "iu": 2, "bu": 3}


def child_seed(seed, *key) -> np.random.SeedSequence:
    """Deterministic sub-stream of ``seed`` (an int or SeedSequence) for ``key``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


@dataclass(frozen=True)
class CirTap:
    amplitude: complex
    delay: float
    cluster: int = -1
    ray: int = -1

    @property
    def power(self) -> float:
        return abs(self.amplitude) ** 2


@dataclass
class Scene:
    """Absolute placement and motion of the BS, IRS and UE arrays."""

    carrier: float
    bs: ArrayGeometry
    irs: ArrayGeometry
    ue: ArrayGeometry
    bs_motion: Trajectory
    ue_motion: Trajectory
    irs_motion: Trajectory = field(default_factory=Trajectory)

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.carrier

    def endpoints(self, sub: str):
        """(tx array, tx motion, rx array, rx motion) of a sub-channel."""
        if sub == "bi":
            return self.bs, self.bs_motion, self.irs, self.irs_motion
        if sub == "iu":
            return self.irs, self.irs_motion, self.ue, self.ue_motion
        if sub == "bu":
            return self.bs, self.bs_motion, self.ue, self.ue_motion
        raise ValueError(f"unknown sub-channel {sub!r}")


def _array(cfg: ArrayConfig, origin, wavelength: float) -> ArrayGeometry:
    half = wavelength / 2
    sx = cfg.spacing_x if cfg.spacing_x is not None else half
    sy = cfg.spacing_y if cfg.spacing_y is not None else half
    return ArrayGeometry(
        cfg.kind, cfg.n_x, cfg.n_y, sx, sy,
        np.deg2rad(cfg.azimuth_x_deg), np.deg2rad(cfg.elevation_x_deg),
        np.deg2rad(cfg.azimuth_y_deg), np.deg2rad(cfg.elevation_y_deg),
        np.asarray(origin, dtype=float),
    )


def build_scene(cfg: ScenarioConfig, carrier: float | None = None) -> Scene:
    carrier = cfg.carrier_frequency if carrier is None else carrier
    lam = SPEED_OF_LIGHT / carrier
    g, m = cfg.geometry, cfg.motion
    return Scene(
        carrier,
        _array(g.bs_array, g.bs_position, lam),
        _array(g.irs_array, g.irs_position, lam),
        _array(g.ue_array, g.ue_position, lam),
        Trajectory.constant(m.bs_speed, np.deg2rad(m.bs_heading_deg) % (2 * np.pi)),
        Trajectory.constant(m.ue_speed, np.deg2rad(m.ue_heading_deg) % (2 * np.pi)),
    )


@dataclass
class Link:
    """One sub-channel with its drawn clusters and per-side visibility.

    ``tx_visibility`` is ``(n_tx, n_clusters)`` and ``rx_visibility`` is
    ``(n_rx, n_clusters)``; a pair of elements sees the clusters visible to both.
    """

    name: str
    carrier: float
    tx: ArrayGeometry
    rx: ArrayGeometry
    tx_motion: Trajectory
    rx_motion: Trajectory
    clusters: list
    tx_visibility: np.ndarray
    rx_visibility: np.ndarray
    rician_factor: float = 0.0
    pdp_decay: float = 100e-9
    link_delay_mean: float = 50e-9

    @property
    def n_clusters(self) -> int:
        return len(self.clusters)

    def pair_visibility(self) -> np.ndarray:
        """Joint visibility, shape ``(n_rx, n_tx, n_clusters)``."""
        return self.rx_visibility[:, None, :] & self.tx_visibility[None, :, :]

    def with_link_delays(self, link_delays) -> "Link":
        clusters = [replace(c, link_delay=np.asarray(d, dtype=float)) for c, d in zip(self.clusters, link_delays)]
        return replace(self, clusters=clusters)

    def link_delay_matrix(self) -> np.ndarray:
        return np.stack([c.link_delay for c in self.clusters])


def _merge_visibility(tx_vis: VisibilityTensor, rx_vis: VisibilityTensor):
    """Shared initial clusters, then tx-side births, then rx-side births.

    A cluster born on one side is visible to every element of the other side.
    """
    n0 = tx_vis.n_initial
    tx_flat, rx_flat = tx_vis.flat(), rx_vis.flat()
    n_tx_born = tx_flat.shape[1] - n0
    n_rx_born = rx_flat.shape[1] - n0
    tx_mask = np.concatenate(
        [tx_flat, np.ones((tx_flat.shape[0], n_rx_born), dtype=bool)], axis=1
    )
    rx_mask = np.concatenate(
        [rx_flat[:, :n0], np.ones((rx_flat.shape[0], n_tx_born), dtype=bool), rx_flat[:, n0:]], axis=1
    )
    return tx_mask, rx_mask


def build_link(
    tx: ArrayGeometry,
    tx_motion: Trajectory,
    rx: ArrayGeometry,
    rx_motion: Trajectory,
    carrier: float,
    evolution: EvolutionParams,
    layout: ClusterLayout,
    seed,
    name: str = "link",
    rician_factor: float = 0.0,
    pdp_decay: float = 100e-9,
) -> Link:
    """Draw visibility on both arrays and one twin cluster per cluster id."""
    tx_vis = evolve_array(evolution, tx, child_seed(seed, 0))
    rx_vis = evolve_array(evolution, rx, child_seed(seed, 1))
    tx_mask, rx_mask = _merge_visibility(tx_vis, rx_vis)
    rng = np.random.default_rng(child_seed(seed, 2))
    clusters = [
        generate_twin_cluster(i, tx.origin, rx.origin, layout, rng) for i in range(tx_mask.shape[1])
    ]
    return Link(
        name, carrier, tx, rx, tx_motion, rx_motion, clusters, tx_mask, rx_mask,
        rician_factor, pdp_decay, layout.link_delay_mean,
    )


def scenario_link(cfg: ScenarioConfig, sub: str, seed, carrier=None, spread_scale=1.0) -> Link:
    scene = build_scene(cfg, carrier)
    tx, tx_motion, rx, rx_motion = scene.endpoints(sub)
    return build_link(
        tx, tx_motion, rx, rx_motion, scene.carrier,
        cfg.clusters.evolution(), cfg.clusters.layout(cfg.motion, spread_scale),
        child_seed(seed, _STREAM[sub]), sub, cfg.channel.rician(sub), cfg.clusters.pdp_decay,
    )


@dataclass
class ChannelRealizationSeries:
    """Taps of one link on a time grid.

    NLoS arrays have shape ``(T, n_rx, n_tx, n_clusters, rays)``; LoS arrays
    ``(T, n_rx, n_tx)``. ``nlos_amplitude`` and ``los_amplitude`` are the
    unweighted unit-power phasors; Rician weights are applied by the views.
    """

    times: np.ndarray
    carrier: float
    rician_factor: float
    tx_indices: np.ndarray
    rx_indices: np.ndarray
    mask: np.ndarray
    nlos_power: np.ndarray
    nlos_delay: np.ndarray
    geometric_delay: np.ndarray
    link_delay: np.ndarray
    los_delay: np.ndarray

    @property
    def shape(self) -> tuple:
        return (self.times.size, self.rx_indices.size, self.tx_indices.size)

    @property
    def weights(self) -> tuple[float, float]:
        k = self.rician_factor
        if np.isinf(k):
            return 1.0, 0.0
        return float(np.sqrt(k / (k + 1))), float(np.sqrt(1 / (k + 1)))

    @property
    def nlos_amplitude(self) -> np.ndarray:
        return np.sqrt(self.nlos_power) * np.exp(2j * np.pi * self.carrier * self.nlos_delay)

    @property
    def los_amplitude(self) -> np.ndarray:
        return np.exp(2j * np.pi * self.carrier * self.los_delay)

    def _select(self, clusters):
        if clusters is None:
            return slice(None)
        return np.atleast_1d(np.asarray(clusters, dtype=int))

    def narrowband_batch(self, link_delays, f: float = 0.0, clusters=None, los: bool = True) -> np.ndarray:
        """Frequency response at baseband offset ``f`` for many link-delay draws.

        ``link_delays`` is ``(B, n_clusters, rays)``; returns ``(B, T, n_rx, n_tx)``.
        Equivalent to realising the link once per draw and summing its taps.
        """
        sel = self._select(clusters)
        link_delays = np.asarray(link_delays, dtype=float)[:, sel]
        static = self.nlos_delay - self.link_delay
        base = np.sqrt(self.nlos_power[..., sel, :]) * np.exp(
            2j * np.pi * (self.carrier - f) * static[..., sel, :]
        )
        base = base.reshape(int(np.prod(self.shape)), -1)
        phase = np.exp(2j * np.pi * (self.carrier - f) * link_delays.reshape(link_delays.shape[0], -1))
        w_los, w_nlos = self.weights
        out = w_nlos * (phase @ base.T)
        out = out.reshape((link_delays.shape[0],) + self.shape)
        if los and w_los:
            out = out + w_los * np.exp(2j * np.pi * (self.carrier - f) * self.los_delay)
        return out

    def narrowband(self, f: float = 0.0, clusters=None, los: bool = True) -> np.ndarray:
        """Coherent tap sum per element pair, shape ``(T, n_rx, n_tx)``."""
        # link delays are shared by every time and element pair
        per_ray = self.link_delay[(0,) * (self.link_delay.ndim - 2)]
        return self.narrowband_batch(per_ray[None], f, clusters, los)[0]

    def matrix(self, time_index: int = 0, f: float = 0.0) -> np.ndarray:
        return self.narrowband(f)[time_index]

    def taps(self, time_index: int, rx: int, tx: int) -> list:
        """Rician-weighted tap list of one element pair (positions in this series)."""
        return rician_combine(
            self.los_tap(time_index, rx, tx), self.nlos_taps(time_index, rx, tx), self.rician_factor
        )

    def nlos_taps(self, time_index: int, rx: int, tx: int) -> list:
        amp = self.nlos_amplitude[time_index, rx, tx]
        delay = self.nlos_delay[time_index, rx, tx]
        vis = self.mask[rx, tx]
        return [
            CirTap(complex(amp[n, m]), float(delay[n, m]), n, m)
            for n in np.flatnonzero(vis)
            for m in range(amp.shape[1])
        ]

    def los_tap(self, time_index: int, rx: int, tx: int) -> CirTap:
        return CirTap(
            complex(self.los_amplitude[time_index, rx, tx]), float(self.los_delay[time_index, rx, tx])
        )


def _indices(n: int, sel) -> np.ndarray:
    idx = np.arange(n) if sel is None else np.atleast_1d(np.asarray(sel, dtype=int))
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"element index outside array of {n}")
    return idx


def realize(link: Link, times, tx_indices=None, rx_indices=None) -> ChannelRealizationSeries:
    """Evaluate all taps of ``link`` at ``times`` for the selected element pairs."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    tx_idx = _indices(link.tx.size, tx_indices)
    rx_idx = _indices(link.rx.size, rx_indices)
    if not link.clusters:
        raise ValueError("link has no clusters")
    rays = {c.rays for c in link.clusters}
    if len(rays) != 1:
        raise ValueError("all clusters of a link must carry the same number of rays")

    tx_pos = (element_positions(link.tx, absolute=True)[tx_idx][None]
              + displacement(link.tx_motion, times)[:, None, :])
    rx_pos = (element_positions(link.rx, absolute=True)[rx_idx][None]
              + displacement(link.rx_motion, times)[:, None, :])
    firsts, lasts = zip(*(c.scatterers_at(times) for c in link.clusters))
    first = np.stack(firsts, axis=1)  # (T, N, M, 3)
    last = np.stack(lasts, axis=1)

    d_tx = np.linalg.norm(first[:, None] - tx_pos[:, :, None, None, :], axis=-1)  # (T, ntx, N, M)
    d_rx = np.linalg.norm(last[:, None] - rx_pos[:, :, None, None, :], axis=-1)  # (T, nrx, N, M)
    d_link = np.linalg.norm(last - first, axis=-1)  # (T, N, M)
    geo = (d_rx[:, :, None] + d_tx[:, None]) / SPEED_OF_LIGHT  # (T, nrx, ntx, N, M)

    mask = link.pair_visibility()[np.ix_(rx_idx, tx_idx)]
    power = ray_powers(geo, link.pdp_decay, mask[None, ..., None])
    tau_link = link.link_delay_matrix()
    delay = geo + d_link[:, None, None] / SPEED_OF_LIGHT + tau_link

    los = np.linalg.norm(rx_pos[:, :, None, :] - tx_pos[:, None, :, :], axis=-1) / SPEED_OF_LIGHT
    return ChannelRealizationSeries(
        times, link.carrier, link.rician_factor, tx_idx, rx_idx, mask,
        power, delay, geo, np.broadcast_to(tau_link, delay.shape), los,
    )


def realize_subchannel(cfg: ScenarioConfig, sub: str, seed, times, carrier=None) -> ChannelRealizationSeries:
    """Draw and realise one sub-channel of a scenario; deterministic per seed."""
    if sub not in SUBCHANNELS:
        raise ValueError(f"unknown sub-channel {sub!r}")
    return realize(scenario_link(cfg, sub, seed, carrier), times)


def nlos_coefficient(link: Link, tx_index: int, rx_index: int, t: float) -> list:
    """Unweighted NLoS taps between one tx and one rx element at time ``t``."""
    series = realize(link, [t], [tx_index], [rx_index])
    return series.nlos_taps(0, 0, 0)


def los_coefficient(link: Link, tx_index: int, rx_index: int, t: float) -> CirTap:
    series = realize(link, [t], [tx_index], [rx_index])
    return series.los_tap(0, 0, 0)


def rician_combine(los: CirTap | None, nlos: list, rician_factor: float) -> list:
    """Scale the LoS tap by sqrt(K/(K+1)) and each NLoS tap by sqrt(1/(K+1))."""
    if rician_factor < 0:
        raise ValueError("Rician factor must be non-negative")
    if np.isinf(rician_factor):
        w_los, w_nlos = 1.0, 0.0
    else:
        w_los = np.sqrt(rician_factor / (rician_factor + 1))
        w_nlos = np.sqrt(1 / (rician_factor + 1))
    out = []
    if los is not None:
        out.append(CirTap(los.amplitude * w_los, los.delay, los.cluster, los.ray))
    out.extend(CirTap(t.amplitude * w_nlos, t.delay, t.cluster, t.ray) for t in nlos)
    return out


def redraw_series(series: ChannelRealizationSeries, link_delays) -> ChannelRealizationSeries:
    """Same geometry with different virtual-link delays ``(n_clusters, rays)``."""
    link_delays = np.asarray(link_delays, dtype=float)
    delay = series.nlos_delay - series.link_delay + link_delays
    return replace(series, nlos_delay=delay, link_delay=np.broadcast_to(link_delays, delay.shape))


def draw_link_delays(link: Link, rng) -> np.ndarray:
    return draw_link_delay(link.link_delay_mean, (link.n_clusters, link.clusters[0].rays), rng)
