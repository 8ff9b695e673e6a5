"""IRS reflection phases, received power over the surface and BS steering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, element_positions, unit_vector


def _check_count(n: int, axis: str) -> None:
    # a single element is accepted as a diagnostic case
    if n != 1 and n % 2:
        raise ValueError(f"IRS element count along {axis} must be even (or 1), got {n}")


@dataclass(frozen=True)
class IrsGeometryView:
    """Per-element Tx and Rx distances seen by an ``n_x`` x ``n_y`` IRS.

    ``r_t`` and ``r_r`` have shape ``(n_x, n_y)``.
    """

    r_t: np.ndarray
    r_r: np.ndarray
    d_x: float
    d_y: float
    wavelength: float

    def __post_init__(self):
        r_t = np.atleast_2d(np.asarray(self.r_t, dtype=float))
        r_r = np.atleast_2d(np.asarray(self.r_r, dtype=float))
        if r_t.shape != r_r.shape or r_t.ndim != 2:
            raise ValueError("r_t and r_r must be matching 2-D arrays")
        if np.any(r_t <= 0) or np.any(r_r <= 0):
            raise ValueError("element distances must be positive")
        if self.d_x <= 0 or self.d_y <= 0 or self.wavelength <= 0:
            raise ValueError("spacings and wavelength must be positive")
        _check_count(r_t.shape[0], "x")
        _check_count(r_t.shape[1], "y")
        object.__setattr__(self, "r_t", r_t)
        object.__setattr__(self, "r_r", r_r)

    @property
    def shape(self) -> tuple[int, int]:
        return self.r_t.shape

    @classmethod
    def from_positions(cls, irs: ArrayGeometry, tx, rx, wavelength, d_x=None, d_y=None):
        """Distances from point ``tx`` and to point ``rx`` for every IRS element."""
        pos = element_positions(irs, absolute=True).reshape(irs.n_x, irs.n_y, 3)
        r_t = np.linalg.norm(pos - np.asarray(tx, dtype=float), axis=-1)
        r_r = np.linalg.norm(pos - np.asarray(rx, dtype=float), axis=-1)
        d_x = irs.spacing_x if d_x is None else d_x
        d_y = irs.spacing_y if d_y is None else d_y
        return cls(r_t, r_r, d_x, d_y, wavelength)


@dataclass(frozen=True)
class PhaseMatrix:
    """Diagonal unit-modulus reflection matrix, flat order ``x * n_y + y``."""

    phases: np.ndarray
    shape: tuple[int, int]

    @property
    def coefficients(self) -> np.ndarray:
        return np.exp(1j * self.phases)

    @property
    def matrix(self) -> np.ndarray:
        return np.diag(self.coefficients)

    def __len__(self) -> int:
        return self.phases.size

    @classmethod
    def from_grid(cls, phases) -> "PhaseMatrix":
        grid = np.atleast_2d(np.asarray(phases, dtype=float))
        return cls(np.mod(grid.reshape(-1), 2 * np.pi), grid.shape)


def optimal_phase(r_t, r_r, wavelength):
    """Phase that zeroes the propagation phase of a reflected path, in [0, 2pi)."""
    r_t = np.asarray(r_t, dtype=float)
    r_r = np.asarray(r_r, dtype=float)
    if np.any(r_t <= 0) or np.any(r_r <= 0) or wavelength <= 0:
        raise ValueError("distances and wavelength must be positive")
    # reduce the path modulo one wavelength before scaling to keep precision
    return np.mod(2 * np.pi * (np.mod(r_t + r_r, wavelength) / wavelength), 2 * np.pi)


def build_phase_matrix(view: IrsGeometryView) -> PhaseMatrix:
    return PhaseMatrix.from_grid(optimal_phase(view.r_t, view.r_r, view.wavelength))


def _path_sum(view: IrsGeometryView, phases: np.ndarray) -> complex:
    grid = np.asarray(phases, dtype=float).reshape(view.shape)
    lam = view.wavelength
    path = np.mod(view.r_r + view.r_t, lam)
    terms = np.exp(-1j * (2 * np.pi * path - lam * grid) / lam) / (view.r_r * view.r_t)
    return terms.sum()


def received_power(p_t: float, view: IrsGeometryView, phases) -> float:
    """Received power over the IRS for transmit power ``p_t``.

    ``phases`` is a :class:`PhaseMatrix` or any array of ``n_x * n_y`` phases.
    """
    if p_t < 0:
        raise ValueError("transmit power must be non-negative")
    if isinstance(phases, PhaseMatrix):
        phases = phases.phases
    lam = view.wavelength
    scale = view.d_x * view.d_y * lam**2 / (64 * np.pi**3)
    return float(p_t * scale * abs(_path_sum(view, phases)) ** 2)


def cascaded_path_loss(view: IrsGeometryView) -> float:
    """Linear gain of the BS-IRS-UE path with optimally configured phases."""
    return received_power(1.0, view, build_phase_matrix(view))


@dataclass(frozen=True)
class SteeringVector:
    coefficients: np.ndarray
    azimuth: float
    elevation: float
    doppler: float = 0.0

    def __len__(self) -> int:
        return self.coefficients.size


def steering_vector(
    array: ArrayGeometry,
    azimuth: float,
    elevation: float,
    wavelength: float,
    doppler: float = 0.0,
    t: float = 0.0,
    offset=None,
) -> SteeringVector:
    """Per-antenna weights pointing the array towards ``(azimuth, elevation)``.

    Element vectors are the element offsets minus ``offset`` (default half a
    wavelength on each axis).
    """
    if offset is None:
        offset = np.full(3, wavelength / 2)
    r = element_positions(array) - np.asarray(offset, dtype=float)
    e = unit_vector(azimuth, elevation)
    phase = 2 * np.pi * (r @ e) / wavelength + 2 * np.pi * doppler * t
    return SteeringVector(np.exp(1j * phase), float(azimuth), float(elevation), float(doppler))
