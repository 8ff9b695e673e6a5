"""Large-scale fading and composition of the total IRS-assisted channel."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig
from .fading import build_scene, child_seed, realize_subchannel
from .geometry import SPEED_OF_LIGHT, direction_angles
from .irs_control import (
    IrsGeometryView,
    PhaseMatrix,
    SteeringVector,
    build_phase_matrix,
    cascaded_path_loss,
    steering_vector,
)

# seed-stream key of the block shadowing draw; 1..3 are the sub-channels
_SHADOWING = 4


@dataclass(frozen=True)
class LargeScaleParams:
    """Linear shadowing samples and path gains of the three sub-channels."""

    sf_bi: float = 1.0
    sf_iu: float = 1.0
    sf_bu: float = 1.0
    pl_bu: float = 1.0
    pl_biu: float = 1.0
    shadowing_std_db: float = 0.0

    def __post_init__(self):
        for name in ("sf_bi", "sf_iu", "sf_bu"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.pl_bu < 0 or self.pl_biu < 0:
            raise ValueError("path gains must be non-negative")

    @property
    def cascade_gain(self) -> float:
        return float(np.sqrt(self.sf_bi * self.sf_iu * self.pl_biu))

    @property
    def direct_gain(self) -> float:
        return float(np.sqrt(self.sf_bu * self.pl_bu))


def free_space_pl(distance: float, carrier: float) -> float:
    """Free-space gain ``(lambda / (4 pi d))**2``."""
    if distance <= 0 or carrier <= 0:
        raise ValueError("distance and carrier frequency must be positive")
    lam = SPEED_OF_LIGHT / carrier
    return (lam / (4 * np.pi * distance)) ** 2


def sample_shadowing(std_db: float, rng=None, size=None):
    """Lognormal shadowing ``10**(g/10)``, ``g ~ N(0, std_db**2)``; median one."""
    if std_db < 0:
        raise ValueError("shadowing standard deviation must be non-negative")
    if std_db == 0:
        return 1.0 if size is None else np.ones(size)
    rng = np.random.default_rng(rng)
    return 10 ** (rng.normal(0.0, std_db, size) / 10)


def draw_large_scale(std_db: float, pl_bu: float, pl_biu: float, rng=None) -> LargeScaleParams:
    """One block of shadowing for all three sub-channels."""
    rng = np.random.default_rng(rng)
    sf = [float(sample_shadowing(std_db, rng)) for _ in range(3)]
    return LargeScaleParams(sf[0], sf[1], sf[2], pl_bu, pl_biu, std_db)


def compose_total(h_bi, h_iu, h_bu, phases, steering, large_scale: LargeScaleParams) -> np.ndarray:
    """Total channel per UE antenna, shape ``(M_U,)``.

    ``h_bi`` is ``(M_xy, M_B)``, ``h_iu`` is ``(M_U, M_xy)`` and ``h_bu`` is
    ``(M_U, M_B)``. Pass ``h_bu=None`` to drop the direct path. Plain arrays
    given for ``phases`` or ``steering`` are taken as complex coefficients
    (the diagonal of the reflection matrix), not as angles.
    """
    h_bi = np.atleast_2d(np.asarray(h_bi, dtype=complex))
    h_iu = np.atleast_2d(np.asarray(h_iu, dtype=complex))
    phi = phases.coefficients if isinstance(phases, PhaseMatrix) else np.atleast_1d(np.asarray(phases, dtype=complex))
    f = steering.coefficients if isinstance(steering, SteeringVector) else np.atleast_1d(np.asarray(steering, dtype=complex))
    m_xy, m_b = h_bi.shape
    m_u = h_iu.shape[0]
    if h_iu.shape[1] != m_xy:
        raise ValueError(f"h_iu has {h_iu.shape[1]} columns, expected {m_xy}")
    if phi.shape != (m_xy,):
        raise ValueError(f"phase matrix has {phi.size} entries, expected {m_xy}")
    if f.shape != (m_b,):
        raise ValueError(f"steering vector has {f.size} entries, expected {m_b}")
    total = large_scale.cascade_gain * (h_iu * phi) @ h_bi
    if h_bu is not None:
        h_bu = np.atleast_2d(np.asarray(h_bu, dtype=complex))
        if h_bu.shape != (m_u, m_b):
            raise ValueError(f"h_bu has shape {h_bu.shape}, expected {(m_u, m_b)}")
        total = total + large_scale.direct_gain * h_bu
    return total @ f


def total_channel(cfg: ScenarioConfig, seed, times, carrier=None, path_loss=free_space_pl) -> np.ndarray:
    """Total channel of a scenario per time and UE antenna, shape ``(T, M_U)``.

    The IRS uses the optimal phases for the BS and UE reference points and the
    BS steers towards the IRS reference point. Shadowing is drawn once per
    call. ``path_loss(distance, carrier)`` gives the direct-path gain.
    ``channel.enable_irs`` and ``channel.enable_direct`` switch the two paths.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    ch = cfg.channel
    if not (ch.enable_irs or ch.enable_direct):
        raise ValueError("channel.enable_irs and channel.enable_direct are both off")
    scene = build_scene(cfg, carrier)
    lam = scene.wavelength
    view = IrsGeometryView.from_positions(scene.irs, scene.bs.origin, scene.ue.origin, lam, ch.irs_dx, ch.irs_dy)
    phases = build_phase_matrix(view)
    pl_biu = cascaded_path_loss(view) if ch.enable_irs else 0.0
    pl_bu = path_loss(float(np.linalg.norm(scene.ue.origin - scene.bs.origin)), scene.carrier)
    ls = draw_large_scale(ch.shadowing_std_db, pl_bu, pl_biu, child_seed(seed, _SHADOWING))

    m_u, m_xy = scene.ue.size, scene.irs.size
    h_bi = realize_subchannel(cfg, "bi", seed, times, carrier).narrowband() if ch.enable_irs else None
    h_iu = realize_subchannel(cfg, "iu", seed, times, carrier).narrowband() if ch.enable_irs else None
    h_bu = realize_subchannel(cfg, "bu", seed, times, carrier).narrowband() if ch.enable_direct else None
    az, el = direction_angles(scene.irs.origin - scene.bs.origin)
    out = np.empty((times.size, m_u), dtype=complex)
    for k, t in enumerate(times):
        f = steering_vector(scene.bs, az, el, lam, ch.steering_doppler, t)
        bi = h_bi[k] if h_bi is not None else np.zeros((m_xy, scene.bs.size))
        iu = h_iu[k] if h_iu is not None else np.zeros((m_u, m_xy))
        out[k] = compose_total(bi, iu, None if h_bu is None else h_bu[k], phases, f, ls)
    return out
