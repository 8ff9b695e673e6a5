"""Correlation functions and delay-spread statistics.

Simulated curves are ensemble averages of channel samples. Analytical curves
are evaluated from a fixed scatterer snapshot: per-ray path lengths are
recomputed here from the relative-vector form of the geometry so the two
routes share only the drawn scatterers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .clusters import ray_powers
from .fading import Link
from .geometry import SPEED_OF_LIGHT, displacement, element_position


@dataclass
class CorrelationCurve:
    """Correlation versus lag; ``values`` are normalised by the zero-lag value."""

    lags: np.ndarray
    raw: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def values(self) -> np.ndarray:
        zero = self.raw[0]
        if zero == 0:
            return np.zeros_like(self.raw)
        if np.imag(zero) == 0 and np.iscomplexobj(self.raw):
            # componentwise real division keeps values[0] exactly one
            zero = np.real(zero)
            return self.raw.real / zero + 1j * (self.raw.imag / zero)
        return self.raw / zero

    @property
    def magnitude(self) -> np.ndarray:
        return np.abs(self.values)


@dataclass
class CorrelationAccumulator:
    """Running sums for ``E{h0 * conj(h_k)}`` over ensemble members.

    Column 0 of every batch is the reference sample (zero lag). Merging is a
    plain sum, so chunked reductions are order independent up to rounding.
    """

    cross: np.ndarray
    power: np.ndarray
    count: int = 0

    @classmethod
    def empty(cls, n_lags: int) -> "CorrelationAccumulator":
        return cls(np.zeros(n_lags, dtype=complex), np.zeros(n_lags), 0)

    def add(self, samples) -> "CorrelationAccumulator":
        samples = np.atleast_2d(np.asarray(samples, dtype=complex))
        self.cross += (samples[:, :1] * samples.conj()).sum(axis=0)
        self.power += (np.abs(samples) ** 2).sum(axis=0)
        # zero lag is E|h0|^2; drop the rounding residue of the complex product
        self.cross[0] = self.power[0]
        self.count += samples.shape[0]
        return self

    def merge(self, other: "CorrelationAccumulator") -> "CorrelationAccumulator":
        return CorrelationAccumulator(self.cross + other.cross, self.power + other.power, self.count + other.count)

    def curve(self, lags, **meta) -> CorrelationCurve:
        if self.count == 0:
            raise ValueError("empty ensemble")
        return CorrelationCurve(np.asarray(lags), self.cross / self.count, dict(meta, ensemble=self.count))

    def cauchy_schwarz_bound(self) -> np.ndarray:
        """``sqrt(E|h0|^2 E|h_k|^2)``, an upper bound on every raw value."""
        return np.sqrt(self.power[0] * self.power) / self.count


def time_acf_sim(samples, lags, **meta) -> CorrelationCurve:
    """Ensemble estimate of ``E{h(t) h*(t + dt)}``.

    ``samples`` is ``(members, lags)`` with column 0 taken at ``dt = 0``.
    """
    samples = np.atleast_2d(samples)
    if samples.shape[0] == 0:
        raise ValueError("empty ensemble")
    return CorrelationAccumulator.empty(samples.shape[1]).add(samples).curve(lags, **meta)


def spatial_ccf_sim(samples, lags, **meta) -> CorrelationCurve:
    """Ensemble estimate of ``E{H_q H*_q'}``; column 0 of ``samples`` is ``q``."""
    return time_acf_sim(samples, lags, **meta)


@dataclass
class RayGeometry:
    """Per-ray path lengths of one element pair over a time grid.

    ``path`` includes the inter-scatterer segment; ``geometric`` is the
    tx-to-first plus last-to-rx length used for powers and delay spread.
    Shapes are ``(T, n_clusters, rays)``; ``los`` is ``(T,)``.
    """

    path: np.ndarray
    geometric: np.ndarray
    los: np.ndarray
    visible: np.ndarray


def ray_geometry(link: Link, tx_index: int, rx_index: int, times) -> RayGeometry:
    times = np.atleast_1d(np.asarray(times, dtype=float))
    l_tx = element_position(link.tx, tx_index)
    l_rx = element_position(link.rx, rx_index)
    move_tx = displacement(link.tx_motion, times)
    move_rx = displacement(link.rx_motion, times)
    path, geo = [], []
    for c in link.clusters:
        move_a = displacement(c.first_motion, times)
        move_z = displacement(c.last_motion, times)
        # vector from each array element to its scatterer, relative motion applied
        to_first = (c.first_scatterers - link.tx.origin)[None] - (l_tx + move_tx - move_a)[:, None]
        to_last = (c.last_scatterers - link.rx.origin)[None] - (l_rx + move_rx - move_z)[:, None]
        hop = (c.last_scatterers - c.first_scatterers)[None] + (move_z - move_a)[:, None]
        g = np.linalg.norm(to_first, axis=-1) + np.linalg.norm(to_last, axis=-1)
        geo.append(g)
        path.append(g + np.linalg.norm(hop, axis=-1))
    los_vec = (link.tx.origin - link.rx.origin) + l_tx - l_rx + move_tx - move_rx
    visible = link.tx_visibility[tx_index] & link.rx_visibility[rx_index]
    return RayGeometry(np.stack(path, 1), np.stack(geo, 1), np.linalg.norm(los_vec, axis=-1), visible)


def pair_powers(link: Link, geom: RayGeometry) -> np.ndarray:
    return ray_powers(geom.geometric / SPEED_OF_LIGHT, link.pdp_decay, geom.visible[None, :, None])


def nlos_acf_ana(powers, paths, carrier: float, f: float = 0.0) -> np.ndarray:
    """Sum over rays of ``sqrt(P(t) P(t+dt)) exp(j 2 pi (fc - f) (d(t) - d(t+dt)) / c)``.

    ``powers`` and ``paths`` are ``(lags, ...)`` with row 0 at ``dt = 0``.
    """
    powers = np.asarray(powers, dtype=float)
    paths = np.asarray(paths, dtype=float)
    k = 2 * np.pi * (carrier - f) / SPEED_OF_LIGHT
    terms = np.sqrt(powers[:1] * powers) * np.exp(1j * k * (paths[:1] - paths))
    return terms.reshape(terms.shape[0], -1).sum(axis=1)


def los_acf_ana(los_paths, carrier: float, f: float = 0.0, los_power=1.0) -> np.ndarray:
    los_paths = np.asarray(los_paths, dtype=float)
    los_power = np.broadcast_to(np.asarray(los_power, dtype=float), los_paths.shape)
    k = 2 * np.pi * (carrier - f) / SPEED_OF_LIGHT
    return np.sqrt(los_power[0] * los_power) * np.exp(1j * k * (los_paths[0] - los_paths))


def time_acf_rician(acf_los, acf_nlos, rician_factor: float) -> np.ndarray:
    if rician_factor < 0:
        raise ValueError("Rician factor must be non-negative")
    if np.isinf(rician_factor):
        return np.asarray(acf_los, dtype=complex)
    k = rician_factor
    return k / (k + 1) * np.asarray(acf_los) + 1 / (k + 1) * np.asarray(acf_nlos)


def select_clusters(powers, clusters):
    if clusters is None:
        return powers
    keep = np.zeros(powers.shape[-2], dtype=bool)
    keep[np.atleast_1d(clusters)] = True
    return np.where(keep[:, None], powers, 0.0)


def link_acf_ana(link: Link, tx_index: int, rx_index: int, times, f: float = 0.0, clusters=None) -> np.ndarray:
    """Analytical Rician ACF of one sub-channel pair; ``times[0]`` is the reference."""
    geom = ray_geometry(link, tx_index, rx_index, times)
    powers = select_clusters(pair_powers(link, geom), clusters)
    nlos = nlos_acf_ana(powers, geom.path, link.carrier, f)
    los = los_acf_ana(geom.los, link.carrier, f)
    return time_acf_rician(los, nlos, link.rician_factor)


def time_acf_ana(hop_acfs, phases=None) -> np.ndarray:
    """Cascade of independent hops: product of hop ACFs times the IRS phase factor.

    ``phases`` are the reflection phases ``theta_r`` on the lag grid (row 0 at
    ``dt = 0``); ``None`` means a time-constant phase, i.e. a factor of one.
    """
    out = np.ones_like(np.asarray(hop_acfs[0], dtype=complex))
    for acf in hop_acfs:
        out = out * np.asarray(acf)
    if phases is not None:
        phases = np.asarray(phases, dtype=float)
        out = out * np.exp(1j * (phases[0] - phases))
    return out


def spatial_ccf_ana(
    link: Link, side: str, ref_index: int, indices, t: float = 0.0, f: float = 0.0,
    other_index: int = 0, clusters=None,
) -> np.ndarray:
    """Analytical cross-correlation between element ``ref_index`` and ``indices``.

    ``side`` ("tx" or "rx") is the array being swept; ``other_index`` fixes the
    element on the opposite end. Only rays visible to both elements contribute.
    """
    indices = np.atleast_1d(indices)
    geoms = []
    for i in np.concatenate([[ref_index], indices]):
        tx, rx = (i, other_index) if side == "tx" else (other_index, i)
        geoms.append(ray_geometry(link, int(tx), int(rx), [t]))
    ref = geoms[0]
    p_ref = select_clusters(pair_powers(link, ref)[0], clusters)
    k = 2 * np.pi * (link.carrier - f) / SPEED_OF_LIGHT
    out = []
    for g in geoms[1:]:
        p = select_clusters(pair_powers(link, g)[0], clusters)
        nlos = np.sum(np.sqrt(p_ref * p) * np.exp(1j * k * (ref.path[0] - g.path[0])))
        los = np.exp(1j * k * (ref.los[0] - g.los[0]))
        out.append(time_acf_rician(los, nlos, link.rician_factor))
    return np.asarray(out, dtype=complex)


def rms_delay_spread(powers, delays) -> float:
    """Power-weighted standard deviation of ``delays``; powers are normalised here."""
    powers = np.asarray(powers, dtype=float).ravel()
    delays = np.asarray(delays, dtype=float).ravel()
    if powers.size == 0:
        raise ValueError("empty tap set")
    if powers.shape != delays.shape:
        raise ValueError("powers and delays must have the same length")
    total = powers.sum()
    if total <= 0:
        raise ValueError("total power must be positive")
    p = powers / total
    mean = np.dot(p, delays)
    # centred second moment; algebraically equal to E[tau^2] - E[tau]^2
    return float(np.sqrt(np.dot(p, (delays - mean) ** 2)))


def cascaded_delay_spread(*hops) -> float:
    """Sum of per-hop RMS delay spreads; each hop is a ``(powers, delays)`` pair."""
    return float(sum(rms_delay_spread(p, d) for p, d in hops))


def ds_cdf(samples, min_samples: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Empirical CDF ``(sorted values, probabilities)`` of delay-spread samples."""
    values = np.sort(np.asarray(samples, dtype=float).ravel())
    if values.size < min_samples:
        raise ValueError(f"need at least {min_samples} samples, got {values.size}")
    if np.any(values < 0):
        raise ValueError("delay spreads must be non-negative")
    return values, np.arange(1, values.size + 1) / values.size


def evaluate_cdf(values, x):
    """Right-continuous empirical CDF of sorted ``values`` at ``x``."""
    values = np.asarray(values, dtype=float)
    return np.searchsorted(values, x, side="right") / values.size
