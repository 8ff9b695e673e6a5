"""Coordinate systems, array layouts and piecewise-constant motion.

All vectors are row vectors (shape ``(3,)`` or ``(..., 3)``) and rotations act
from the right: ``local = point @ R``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import tau

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0


def vec3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def unit_vector(azimuth, elevation) -> np.ndarray:
    """Direction cosines ``[cosE cosA, cosE sinA, sinE]``; broadcasts over inputs."""
    azimuth = np.asarray(azimuth, dtype=float)
    elevation = np.asarray(elevation, dtype=float)
    return np.stack(
        [
            np.cos(elevation) * np.cos(azimuth),
            np.cos(elevation) * np.sin(azimuth),
            np.sin(elevation),
        ],
        axis=-1,
    )


def direction_angles(vector) -> tuple[float, float]:
    """Inverse of :func:`unit_vector`: (azimuth, elevation) of ``vector``."""
    x, y, z = np.asarray(vector, dtype=float)
    return float(np.arctan2(y, x)), float(np.arctan2(z, np.hypot(x, y)))


@dataclass(frozen=True)
class RotationAngles:
    """Bearing, downtilt and slant angles (radians) relating GCS and LCS."""

    bearing: float = 0.0
    downtilt: float = 0.0
    slant: float = 0.0

    def __post_init__(self):
        for name in ("bearing", "downtilt", "slant"):
            value = getattr(self, name)
            if not (0.0 <= value < tau):
                raise ValueError(f"{name}={value!r} outside [0, 2*pi)")

    @classmethod
    def random(cls, rng: np.random.Generator) -> "RotationAngles":
        a, b, g = rng.uniform(0.0, tau, size=3)
        return cls(float(a), float(b), float(g))


def rotation_matrix(angles: RotationAngles) -> np.ndarray:
    """Product of the z (bearing), y (downtilt) and x (slant) axis rotations."""
    ca, sa = np.cos(angles.bearing), np.sin(angles.bearing)
    cb, sb = np.cos(angles.downtilt), np.sin(angles.downtilt)
    cg, sg = np.cos(angles.slant), np.sin(angles.slant)
    rz = np.array([[ca, -sa, 0.0], [sa, ca, 0.0], [0.0, 0.0, 1.0]])
    ry = np.array([[cb, 0.0, sb], [0.0, 1.0, 0.0], [-sb, 0.0, cb]])
    rx = np.array([[1.0, 0.0, 0.0], [0.0, cg, -sg], [0.0, sg, cg]])
    return rz @ ry @ rx


def gcs_to_lcs(point, rotation: np.ndarray) -> np.ndarray:
    return np.asarray(point, dtype=float) @ rotation


def lcs_to_gcs(point, rotation: np.ndarray) -> np.ndarray:
    return np.asarray(point, dtype=float) @ rotation.T


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform linear or planar array.

    A linear array uses only the x axis (``n_y == 1``). Element ``(x, y)`` of a
    planar array has flat index ``x * n_y + y`` (zero based).
    """

    kind: str
    n_x: int
    n_y: int = 1
    spacing_x: float = 0.5
    spacing_y: float = 0.5
    azimuth_x: float = 0.0
    elevation_x: float = 0.0
    azimuth_y: float = 0.0
    elevation_y: float = 0.0
    origin: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        if self.kind not in ("linear", "planar"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("element counts must be >= 1")
        if self.kind == "linear" and self.n_y != 1:
            raise ValueError("linear array must have n_y == 1")
        if self.spacing_x <= 0 or self.spacing_y <= 0:
            raise ValueError("element spacings must be positive")
        object.__setattr__(self, "origin", np.asarray(self.origin, dtype=float).reshape(3))

    @classmethod
    def linear(cls, n, spacing, azimuth=0.0, elevation=0.0, origin=(0.0, 0.0, 0.0)):
        return cls("linear", n, 1, spacing, spacing, azimuth, elevation, 0.0, 0.0, np.asarray(origin))

    @classmethod
    def planar(
        cls,
        n_x,
        n_y,
        spacing_x,
        spacing_y,
        azimuth_x=0.0,
        elevation_x=0.0,
        azimuth_y=np.pi / 2,
        elevation_y=0.0,
        origin=(0.0, 0.0, 0.0),
    ):
        return cls(
            "planar", n_x, n_y, spacing_x, spacing_y,
            azimuth_x, elevation_x, azimuth_y, elevation_y, np.asarray(origin),
        )

    @property
    def size(self) -> int:
        return self.n_x * self.n_y

    @property
    def axis_x(self) -> np.ndarray:
        return unit_vector(self.azimuth_x, self.elevation_x)

    @property
    def axis_y(self) -> np.ndarray:
        return unit_vector(self.azimuth_y, self.elevation_y)

    def unravel(self, index: int) -> tuple[int, int]:
        if not 0 <= index < self.size:
            raise IndexError(f"element index {index} outside array of {self.size}")
        return divmod(index, self.n_y)

    def with_origin(self, origin) -> "ArrayGeometry":
        return ArrayGeometry(
            self.kind, self.n_x, self.n_y, self.spacing_x, self.spacing_y,
            self.azimuth_x, self.elevation_x, self.azimuth_y, self.elevation_y,
            np.asarray(origin, dtype=float),
        )


def element_position(array: ArrayGeometry, index) -> np.ndarray:
    """Offset of one element from the array reference.

    ``index`` is a flat index or an ``(x, y)`` pair, zero based.
    """
    if isinstance(index, tuple):
        ix, iy = index
        if not (0 <= ix < array.n_x and 0 <= iy < array.n_y):
            raise IndexError(f"element {index} outside {array.n_x}x{array.n_y} array")
    else:
        ix, iy = array.unravel(int(index))
    offset = ix * array.spacing_x * array.axis_x
    if array.kind == "planar":
        offset = offset + iy * array.spacing_y * array.axis_y
    return offset


def element_positions(array: ArrayGeometry, absolute: bool = False) -> np.ndarray:
    """All element offsets in flat-index order, shape ``(size, 3)``."""
    ix, iy = np.divmod(np.arange(array.size), array.n_y)
    pos = ix[:, None] * array.spacing_x * array.axis_x
    if array.kind == "planar":
        pos = pos + iy[:, None] * array.spacing_y * array.axis_y
    if absolute:
        pos = pos + array.origin
    return pos


@dataclass(frozen=True)
class Trajectory:
    """Piecewise-constant velocity in the horizontal plane.

    ``segments`` holds ``(speed, heading, duration)`` triples; the last segment
    is extended indefinitely regardless of its duration.
    """

    segments: tuple = ((0.0, 0.0, np.inf),)

    def __post_init__(self):
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        for speed, heading, duration in self.segments:
            if speed < 0:
                raise ValueError(f"negative speed {speed}")
            if not (0.0 <= heading < tau):
                raise ValueError(f"heading {heading} outside [0, 2*pi)")
            if duration <= 0:
                raise ValueError(f"segment duration must be positive, got {duration}")

    @classmethod
    def constant(cls, speed: float = 0.0, heading: float = 0.0) -> "Trajectory":
        return cls(((float(speed), float(heading) % tau, np.inf),))

    @property
    def is_static(self) -> bool:
        return all(s == 0.0 for s, _, _ in self.segments)

    def velocity(self, t: float) -> np.ndarray:
        start = 0.0
        for i, (speed, heading, duration) in enumerate(self.segments):
            if t < start + duration or i == len(self.segments) - 1:
                return speed * vec3(np.cos(heading), np.sin(heading), 0.0)
            start += duration
        raise AssertionError("unreachable")


def displacement(trajectory: Trajectory, t) -> np.ndarray:
    """Exact integral of the velocity from 0 to ``t``; vectorised over ``t``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("time must be non-negative")
    out = np.zeros(t.shape + (3,))
    start = 0.0
    last = len(trajectory.segments) - 1
    for i, (speed, heading, duration) in enumerate(trajectory.segments):
        end = np.inf if i == last else start + duration
        elapsed = np.clip(t, start, end) - start
        v = speed * np.array([np.cos(heading), np.sin(heading), 0.0])
        out = out + elapsed[..., None] * v
        start = end
    return out
