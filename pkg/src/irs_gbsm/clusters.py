"""Twin clusters, scatterer sampling and birth-death visibility over arrays."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    RotationAngles,
    Trajectory,
    direction_angles,
    displacement,
    lcs_to_gcs,
    rotation_matrix,
    unit_vector,
)

MODES = ("corrected", "paper-literal")


@dataclass(frozen=True)
class EvolutionParams:
    """Birth/death rates and correlation distance of the array evolution.

    In ``corrected`` mode ``exp(-death_rate * delta * cos(elev) / D)`` is the
    probability that a cluster survives one element step. ``paper-literal``
    uses ``exp(-birth_rate * delta * cos(elev) / D)`` as the death probability.
    """

    birth_rate: float = 80.0
    death_rate: float = 4.0
    correlation_distance: float = 10.0
    mode: str = "corrected"

    def __post_init__(self):
        if self.birth_rate <= 0 or self.death_rate <= 0 or self.correlation_distance <= 0:
            raise ValueError("birth rate, death rate and correlation distance must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def mean_count(self) -> float:
        return self.birth_rate / self.death_rate


def initial_cluster_count(params: EvolutionParams) -> int:
    if params.death_rate == 0:
        raise ZeroDivisionError("death rate must be non-zero")
    # round() is half-to-even
    return max(1, round(params.birth_rate / params.death_rate))


def death_probability(params: EvolutionParams, spacing: float, elevation: float) -> float:
    if spacing < 0:
        raise ValueError("element spacing must be non-negative")
    projected = spacing * np.cos(elevation) / params.correlation_distance
    if params.mode == "paper-literal":
        return float(np.exp(-params.birth_rate * projected))
    return float(1.0 - np.exp(-params.death_rate * projected))


def survival_probability(params: EvolutionParams, spacing: float, elevation: float) -> float:
    return 1.0 - death_probability(params, spacing, elevation)


def mean_births(params: EvolutionParams, spacing: float, elevation: float) -> float:
    # corrected: (1 - P_survive); literal: (1 - P_death) exactly as written
    if params.mode == "paper-literal":
        return params.mean_count * (1.0 - death_probability(params, spacing, elevation))
    return params.mean_count * (1.0 - survival_probability(params, spacing, elevation))


@dataclass
class VisibilityTensor:
    """Boolean visibility of clusters per array element, shape ``(n_x, n_y, n_clusters)``."""

    mask: np.ndarray
    n_initial: int

    @property
    def n_clusters(self) -> int:
        return self.mask.shape[2]

    def flat(self) -> np.ndarray:
        """Visibility per flat element index, shape ``(n_x * n_y, n_clusters)``."""
        nx, ny, nc = self.mask.shape
        return self.mask.reshape(nx * ny, nc)

    def visible(self, index) -> np.ndarray:
        if isinstance(index, tuple):
            return np.flatnonzero(self.mask[index[0], index[1]])
        return np.flatnonzero(self.flat()[index])

    @classmethod
    def all_visible(cls, n_x: int, n_y: int, n_clusters: int) -> "VisibilityTensor":
        return cls(np.ones((n_x, n_y, n_clusters), dtype=bool), n_clusters)


def _evolve_step(alive, params, spacing, elevation, next_id, rng):
    u = rng.uniform(size=len(alive))
    if params.mode == "paper-literal":
        keep = u >= death_probability(params, spacing, elevation)
    else:
        keep = u < survival_probability(params, spacing, elevation)
    survivors = [c for c, k in zip(alive, keep) if k]
    born = int(rng.poisson(mean_births(params, spacing, elevation)))
    survivors.extend(range(next_id, next_id + born))
    return survivors, next_id + born


def evolve_array(params: EvolutionParams, array: ArrayGeometry, rng=None) -> VisibilityTensor:
    """Birth-death evolution of cluster visibility across ``array``.

    The first row is evolved along x; every column is then evolved along y
    starting from its first-row state. New clusters get ids appended after the
    initial ones.
    """
    rng = np.random.default_rng(rng)
    n0 = initial_cluster_count(params)
    nx, ny = array.n_x, array.n_y
    sets = [[None] * ny for _ in range(nx)]
    sets[0][0] = list(range(n0))
    next_id = n0
    for x in range(1, nx):
        sets[x][0], next_id = _evolve_step(
            sets[x - 1][0], params, array.spacing_x, array.elevation_x, next_id, rng
        )
    for x in range(nx):
        for y in range(1, ny):
            sets[x][y], next_id = _evolve_step(
                sets[x][y - 1], params, array.spacing_y, array.elevation_y, next_id, rng
            )
    mask = np.zeros((nx, ny, next_id), dtype=bool)
    for x in range(nx):
        for y in range(ny):
            mask[x, y, sets[x][y]] = True
    return VisibilityTensor(mask, n0)


def sample_scatterers(center, spread, rotation: RotationAngles, n: int, rng=None) -> np.ndarray:
    """Draw ``n`` scatterers from an ellipsoidal Gaussian around ``center``.

    Coordinates are drawn in the cluster's local frame with standard
    deviations ``spread`` and rotated into the global frame. Returns ``(n, 3)``.
    """
    spread = np.asarray(spread, dtype=float)
    if spread.shape != (3,) or np.any(spread <= 0):
        raise ValueError("spread must hold three positive standard deviations")
    rng = np.random.default_rng(rng)
    local = rng.standard_normal((n, 3)) * spread
    return lcs_to_gcs(local, rotation_matrix(rotation)) + np.asarray(center, dtype=float)


def draw_link_delay(mean: float, size, rng=None) -> np.ndarray:
    """Exponential virtual-link delays; ``mean == 0`` gives zeros."""
    if mean < 0:
        raise ValueError("mean link delay must be non-negative")
    rng = np.random.default_rng(rng)
    if mean == 0:
        return np.zeros(size)
    return rng.exponential(mean, size)


def virtual_link_delay(rate: float, d_mn, rng=None):
    """``tau_link + d_mn / c`` with ``tau_link ~ Exp(rate)``."""
    if rate <= 0:
        raise ValueError("rate must be positive")
    d_mn = np.asarray(d_mn, dtype=float)
    if np.any(d_mn < 0):
        raise ValueError("distance must be non-negative")
    mean = 0.0 if np.isinf(rate) else 1.0 / rate
    return draw_link_delay(mean, d_mn.shape, rng) + d_mn / SPEED_OF_LIGHT


@dataclass(frozen=True)
class ClusterLayout:
    """How twin-cluster centres and scatterers are drawn for one link."""

    rays: int = 20
    spread: tuple = (2.0, 2.0, 1.0)
    link_delay_mean: float = 50e-9
    distance_fraction: tuple = (0.1, 0.45)
    azimuth_spread: float = np.deg2rad(40.0)
    elevation_spread: float = np.deg2rad(10.0)
    speed: float = 0.0
    heading: float = 0.0

    def __post_init__(self):
        if self.rays < 1:
            raise ValueError("rays per cluster must be >= 1")
        lo, hi = self.distance_fraction
        if not (0 < lo <= hi < 1):
            raise ValueError("distance_fraction must satisfy 0 < lo <= hi < 1")


@dataclass
class TwinCluster:
    """First-bounce / last-bounce cluster pair joined by a virtual link.

    Ray ``m`` leaves the transmitter towards ``first_scatterers[m]``, travels
    the virtual link to ``last_scatterers[m]`` and reaches the receiver.
    """

    id: int
    first_center: np.ndarray
    last_center: np.ndarray
    first_scatterers: np.ndarray
    last_scatterers: np.ndarray
    link_delay: np.ndarray
    spread: np.ndarray
    first_rotation: RotationAngles = field(default_factory=RotationAngles)
    last_rotation: RotationAngles = field(default_factory=RotationAngles)
    first_motion: Trajectory = field(default_factory=Trajectory)
    last_motion: Trajectory = field(default_factory=Trajectory)

    @property
    def rays(self) -> int:
        return self.first_scatterers.shape[0]

    def scatterers_at(self, t) -> tuple[np.ndarray, np.ndarray]:
        """Scatterer positions at times ``t``, each ``(..., rays, 3)``."""
        t = np.asarray(t, dtype=float)
        first = self.first_scatterers + displacement(self.first_motion, t)[..., None, :]
        last = self.last_scatterers + displacement(self.last_motion, t)[..., None, :]
        return first, last

    def inter_scatterer_distance(self, t=0.0) -> np.ndarray:
        first, last = self.scatterers_at(t)
        return np.linalg.norm(last - first, axis=-1)

    def virtual_delay(self, t=0.0) -> np.ndarray:
        return self.link_delay + self.inter_scatterer_distance(t) / SPEED_OF_LIGHT


def _centre(origin, target, layout: ClusterLayout, rng) -> np.ndarray:
    span = np.asarray(target) - np.asarray(origin)
    az, el = direction_angles(span)
    frac = rng.uniform(*layout.distance_fraction)
    az += rng.normal(0.0, layout.azimuth_spread)
    el += rng.normal(0.0, layout.elevation_spread)
    return np.asarray(origin) + frac * np.linalg.norm(span) * unit_vector(az, el)


def generate_twin_cluster(cluster_id: int, tx, rx, layout: ClusterLayout, rng=None) -> TwinCluster:
    """Draw one twin cluster for the link from point ``tx`` to point ``rx``.

    The first-bounce centre lies a random fraction of the link length away
    from ``tx`` around the ``tx -> rx`` direction; the last-bounce centre
    mirrors this from ``rx``. Draw order is fixed so results are seed-stable.
    """
    rng = np.random.default_rng(rng)
    first_c = _centre(tx, rx, layout, rng)
    last_c = _centre(rx, tx, layout, rng)
    rot_a = RotationAngles.random(rng)
    rot_z = RotationAngles.random(rng)
    first = sample_scatterers(first_c, layout.spread, rot_a, layout.rays, rng)
    last = sample_scatterers(last_c, layout.spread, rot_z, layout.rays, rng)
    tau_link = draw_link_delay(layout.link_delay_mean, layout.rays, rng)
    motion = Trajectory.constant(layout.speed, layout.heading)
    return TwinCluster(
        cluster_id, first_c, last_c, first, last, tau_link,
        np.asarray(layout.spread, dtype=float), rot_a, rot_z, motion, motion,
    )


def redraw_link_delays(clusters, mean: float, rng=None) -> list:
    """Copies of ``clusters`` with fresh virtual-link delays, geometry untouched."""
    rng = np.random.default_rng(rng)
    out = []
    for c in clusters:
        new = TwinCluster(**c.__dict__)
        new.link_delay = draw_link_delay(mean, c.rays, rng)
        out.append(new)
    return out


def ray_powers(delays, decay: float, mask=None) -> np.ndarray:
    """Exponential power-delay profile normalised to unit sum.

    ``delays`` has shape ``(..., n_clusters, rays)``; ``mask`` (broadcastable to
    it) selects contributing rays. Normalisation runs over the last two axes.
    """
    delays = np.asarray(delays, dtype=float)
    if decay <= 0:
        raise ValueError("power decay constant must be positive")
    if mask is None:
        mask = np.ones(delays.shape, dtype=bool)
    mask = np.broadcast_to(mask, delays.shape)
    masked = np.where(mask, delays, np.inf)
    ref = masked.min(axis=(-2, -1), keepdims=True)
    ref = np.where(np.isfinite(ref), ref, 0.0)
    p = np.where(mask, np.exp(-(delays - ref) / decay), 0.0)
    total = p.sum(axis=(-2, -1), keepdims=True)
    return np.divide(p, total, out=np.zeros_like(p), where=total > 0)
