"""Lossless conversion between rectangular and hyperspherical coordinates.

A d-dimensional gradient ``g`` is represented either as its component
vector or as a magnitude ``||g||`` plus d-1 direction angles.  The first
d-2 angles measure against the successive coordinate axes and are
canonical in [0, pi]; the final angle is the signed planar angle of the
last two components, canonical in (-pi, pi].

All functions are pure and safe to call concurrently.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from geodp import backend
from geodp.errors import ShapeMismatch, UndefinedAngle, ZeroVector

__all__ = [
    "SphericalCoords",
    "arctan2",
    "to_spherical",
    "to_cartesian",
    "canonicalize",
    "to_spherical_batch",
    "to_cartesian_batch",
]


@dataclass(frozen=True, eq=False)
class SphericalCoords:
    """Magnitude plus d-1 direction angles (radians) of a d-vector."""

    magnitude: float
    angles: np.ndarray = field(repr=False)

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=np.float64)
        if angles.ndim != 1 or angles.size < 1:
            raise ShapeMismatch(
                f"angles must be a 1-D vector of length d-1 >= 1, got shape {angles.shape}"
            )
        if not math.isfinite(self.magnitude) or not np.isfinite(angles).all():
            raise ValueError("spherical coordinates must be finite")
        object.__setattr__(self, "angles", angles)

    @property
    def dim(self) -> int:
        return self.angles.size + 1


def arctan2(y: float, x: float) -> float:
    """Two-argument arctangent with range (-pi, pi].

    Raises UndefinedAngle when both arguments are exactly zero.
    """
    if x == 0.0 and y == 0.0:
        raise UndefinedAngle("arctan2(0, 0) is undefined")
    a = math.atan2(y, x)
    # atan2 returns -pi for (-0.0, x<0) and for results that round to -pi;
    # the canonical range is half-open there.
    return math.pi if a == -math.pi else a


def _as_gradient(g) -> np.ndarray:
    g = np.ascontiguousarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size < 2:
        raise ShapeMismatch(f"gradient must be a 1-D vector with d >= 2, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise ValueError("gradient components must be finite")
    return g


def to_spherical(g) -> SphericalCoords:
    """Convert a nonzero gradient to hyperspherical coordinates.

    The result is canonical; raises ZeroVector when ``||g|| == 0`` since
    the direction is then undefined.
    """
    g = _as_gradient(g)
    mag, ang = backend.cart_to_sph(g[None, :])
    if mag[0] == 0.0:
        raise ZeroVector("the zero vector has no direction")
    return SphericalCoords(float(mag[0]), ang[0])


def to_cartesian(s: SphericalCoords) -> np.ndarray:
    """Convert hyperspherical coordinates back to a component vector.

    Total for finite inputs: angles may be non-canonical and the magnitude
    negative (which mirrors the point through the origin).
    """
    mag = np.array([s.magnitude], dtype=np.float64)
    ang = np.ascontiguousarray(s.angles[None, :], dtype=np.float64)
    return backend.sph_to_cart(mag, ang)[0]


def canonicalize(s: SphericalCoords) -> SphericalCoords:
    """Canonical coordinates of the same Cartesian point.

    Implemented as the round trip through rectangular coordinates.  The
    zero point has no canonical direction; all-zero angles are returned.
    """
    g = to_cartesian(s)
    if not g.any():
        return SphericalCoords(0.0, np.zeros(s.angles.size))
    return to_spherical(g)


def to_spherical_batch(g) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise :func:`to_spherical`: ``(n, d) -> ((n,), (n, d-1))``."""
    g = np.ascontiguousarray(g, dtype=np.float64)
    if g.ndim != 2 or g.shape[1] < 2:
        raise ShapeMismatch(f"expected an (n, d) array with d >= 2, got shape {g.shape}")
    if not np.isfinite(g).all():
        raise ValueError("gradient components must be finite")
    mag, ang = backend.cart_to_sph(g)
    zero = np.flatnonzero(mag == 0.0)
    if zero.size:
        raise ZeroVector(f"row {zero[0]} is the zero vector")
    return mag, ang


def to_cartesian_batch(mag, ang) -> np.ndarray:
    """Row-wise :func:`to_cartesian`: ``((n,), (n, d-1)) -> (n, d)``."""
    mag = np.ascontiguousarray(mag, dtype=np.float64)
    ang = np.ascontiguousarray(ang, dtype=np.float64)
    if mag.ndim != 1 or ang.ndim != 2 or mag.shape[0] != ang.shape[0]:
        raise ShapeMismatch(
            f"expected magnitudes (n,) with angles (n, d-1), got {mag.shape} and {ang.shape}"
        )
    if not (np.isfinite(mag).all() and np.isfinite(ang).all()):
        raise ValueError("spherical coordinates must be finite")
    return backend.sph_to_cart(mag, ang)
