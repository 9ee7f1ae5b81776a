"""Clipping, Gaussian noise and the two gradient perturbation mechanisms.

``dp_perturb`` adds calibrated Gaussian noise to the components of a
clipped gradient (classic DP-SGD).  ``geodp_perturb`` instead converts
the gradient to hyperspherical coordinates and perturbs the magnitude and
the direction angles separately, with the direction sensitivity shrunk by
a bounding factor beta.

Noise sources are passed explicitly: any object with a
``standard_normal(size)`` method works, so tests can inject fixed draws.
Every function is pure given its noise source; concurrent callers should
each own a generator.
"""

import math
from dataclasses import dataclass

import numpy as np

from geodp.errors import EmptyBatch, InvalidPrivacyParams, ShapeMismatch, ZeroVector
from geodp.hypersphere import (
    SphericalCoords,
    to_cartesian,
    to_cartesian_batch,
    to_spherical,
    to_spherical_batch,
)

__all__ = [
    "PerturbConfig",
    "PrivacyReport",
    "clip_gradient",
    "average_clipped",
    "gaussian_sigma",
    "sample_noise",
    "direction_sensitivity",
    "dp_perturb",
    "dp_perturb_batch",
    "geodp_perturb",
    "geodp_perturb_coords",
    "geodp_perturb_batch",
    "privacy_report",
]


@dataclass(frozen=True)
class PerturbConfig:
    """Knobs shared by both mechanisms.

    ``clip`` is the per-example L2 bound C (and the magnitude
    sensitivity), ``sigma`` the noise multiplier, ``batch_size`` the
    number of examples averaged into the gradient, ``beta`` the fraction
    of the angular range treated as the direction's privacy region, and
    ``dim`` the gradient dimension.
    """

    clip: float
    sigma: float
    batch_size: int
    beta: float
    dim: int

    def __post_init__(self):
        if not (math.isfinite(self.clip) and self.clip > 0):
            raise ValueError(f"clip threshold must be positive, got {self.clip}")
        if not (math.isfinite(self.sigma) and self.sigma >= 0):
            raise ValueError(f"noise multiplier must be >= 0, got {self.sigma}")
        if self.batch_size < 1:
            raise ValueError(f"batch size must be >= 1, got {self.batch_size}")
        if not 0 < self.beta <= 1:
            raise ValueError(f"bounding factor must be in (0, 1], got {self.beta}")
        if self.dim < 2:
            raise ValueError(f"dimension must be >= 2, got {self.dim}")


@dataclass(frozen=True)
class PrivacyReport:
    epsilon_per_step: float
    delta: float
    steps: int
    epsilon_total: float
    delta_total: float
    relaxation_note: str


def clip_gradient(g, clip: float) -> np.ndarray:
    """Scale ``g`` down to norm at most ``clip``: g / max(1, ||g||/clip).

    The direction is unchanged; gradients already inside the ball pass
    through untouched.  "Inside" allows one part in 1e12 of slack so that
    re-clipping an already-clipped gradient is an exact no-op despite the
    rounding of the scale factor.
    """
    if clip <= 0:
        raise ValueError(f"clip threshold must be positive, got {clip}")
    g = np.asarray(g, dtype=np.float64)
    norm = float(np.linalg.norm(g))
    if norm <= clip * (1.0 + 1e-12):
        return g.copy()
    return g * (clip / norm)


def average_clipped(batch, clip: float) -> np.ndarray:
    """Per-example clip followed by the arithmetic mean."""
    rows = [np.asarray(g, dtype=np.float64) for g in batch]
    if not rows:
        raise EmptyBatch("cannot average an empty batch")
    d = rows[0].shape
    if any(r.shape != d for r in rows):
        raise ShapeMismatch("batch gradients differ in dimension")
    acc = np.zeros(d)
    for r in rows:
        acc += clip_gradient(r, clip)
    return acc / len(rows)


def gaussian_sigma(epsilon: float, delta: float) -> float:
    """Noise multiplier of the Gaussian mechanism: sqrt(2 ln(1.25/delta)) / epsilon.

    The actual noise scale for a query of sensitivity S is ``S * sigma``.
    """
    if not (epsilon > 0 and 0 < delta < 1):
        raise InvalidPrivacyParams(
            f"need epsilon > 0 and 0 < delta < 1, got epsilon={epsilon}, delta={delta}"
        )
    return math.sqrt(2.0 * math.log(1.25 / delta)) / epsilon


def sample_noise(rng, dims: int, sigma: float) -> np.ndarray:
    """i.i.d. zero-mean Gaussian vector with standard deviation ``sigma``."""
    if dims < 1:
        raise ValueError(f"dims must be >= 1, got {dims}")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    return rng.standard_normal(dims) * sigma


def direction_sensitivity(dim: int, beta: float) -> float:
    """L2 sensitivity of the bounded direction: sqrt(dim + 2) * beta * pi.

    The d-2 interior angles each range over beta*pi and the final angle
    over 2*beta*pi, giving sqrt((d-2)(beta pi)^2 + (2 beta pi)^2).
    """
    if dim < 2:
        raise ValueError(f"dimension must be >= 2, got {dim}")
    if not 0 < beta <= 1:
        raise ValueError(f"bounding factor must be in (0, 1], got {beta}")
    return math.sqrt(dim + 2.0) * beta * math.pi


def _check_clipped(g: np.ndarray, cfg: PerturbConfig) -> np.ndarray:
    g = np.asarray(g, dtype=np.float64)
    if g.ndim != 1 or g.size != cfg.dim:
        raise ShapeMismatch(f"expected a vector of dimension {cfg.dim}, got shape {g.shape}")
    # slack for rounding in upstream averaging
    if np.linalg.norm(g) > cfg.clip * (1.0 + 1e-9):
        raise ValueError("gradient norm exceeds the clip threshold; clip before perturbing")
    return g


def dp_perturb(g_clipped, cfg: PerturbConfig, rng) -> np.ndarray:
    """Classic perturbation: g + (C/B) * n with n an i.i.d. std-sigma vector."""
    g = _check_clipped(g_clipped, cfg)
    n_sigma = sample_noise(rng, cfg.dim, cfg.sigma)
    return g + (cfg.clip / cfg.batch_size) * n_sigma


def dp_perturb_batch(rows, cfg: PerturbConfig, rng) -> np.ndarray:
    """Row-wise :func:`dp_perturb` with a single vectorized noise draw."""
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != cfg.dim:
        raise ShapeMismatch(f"expected (n, {cfg.dim}) rows, got shape {rows.shape}")
    noise = rng.standard_normal(rows.shape) * cfg.sigma
    return rows + (cfg.clip / cfg.batch_size) * noise


def geodp_perturb_coords(coords: SphericalCoords, cfg: PerturbConfig, rng) -> SphericalCoords:
    """Spherical-domain core of the geometric mechanism.

    Magnitude noise scale is C*sigma/B; each angle gets independent noise
    of scale sqrt(d+2)*beta*pi*sigma/B.  Angles are left raw (possibly
    non-canonical): wrapping or clamping them would distort the noise
    distribution.
    """
    if coords.dim != cfg.dim:
        raise ShapeMismatch(f"coordinates have dimension {coords.dim}, config says {cfg.dim}")
    n = sample_noise(rng, cfg.dim, cfg.sigma)
    mag = coords.magnitude + (cfg.clip / cfg.batch_size) * n[0]
    ang = coords.angles + (direction_sensitivity(cfg.dim, cfg.beta) / cfg.batch_size) * n[1:]
    return SphericalCoords(float(mag), ang)


def geodp_perturb(g_clipped, cfg: PerturbConfig, rng) -> np.ndarray:
    """Geometric perturbation: noise on magnitude and direction separately.

    A zero clipped gradient has no direction, so only the magnitude is
    perturbed and the result points along the first axis.
    """
    g = _check_clipped(g_clipped, cfg)
    n = sample_noise(rng, cfg.dim, cfg.sigma)
    if not g.any():
        out = np.zeros(cfg.dim)
        out[0] = (cfg.clip / cfg.batch_size) * n[0]
        return out
    coords = to_spherical(g)
    mag = coords.magnitude + (cfg.clip / cfg.batch_size) * n[0]
    ang = coords.angles + (direction_sensitivity(cfg.dim, cfg.beta) / cfg.batch_size) * n[1:]
    return to_cartesian(SphericalCoords(float(mag), ang))


def geodp_perturb_batch(rows, cfg: PerturbConfig, rng):
    """Row-wise geometric perturbation.

    Returns ``(perturbed, angles, noisy_angles)`` so callers measuring
    direction error can use the mechanism's own (raw, unwrapped) angle
    view rather than re-deriving angles from the output vectors.  Rows
    must be nonzero.
    """
    rows = np.asarray(rows, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != cfg.dim:
        raise ShapeMismatch(f"expected (n, {cfg.dim}) rows, got shape {rows.shape}")
    mag, ang = to_spherical_batch(rows)
    noise = rng.standard_normal(rows.shape) * cfg.sigma
    mag2 = mag + (cfg.clip / cfg.batch_size) * noise[:, 0]
    ang2 = ang + (direction_sensitivity(cfg.dim, cfg.beta) / cfg.batch_size) * noise[:, 1:]
    return to_cartesian_batch(mag2, ang2), ang, ang2


def privacy_report(sigma: float, delta: float, steps: int, beta: float) -> PrivacyReport:
    """Per-step and basic-composition privacy levels for a run of ``steps`` iterations.

    ``epsilon_per_step`` inverts :func:`gaussian_sigma`.  Totals use basic
    composition (sums of epsilon and delta).  The note records that the
    direction component is only (epsilon, delta + delta')-private with
    delta' <= 1 - beta, and that under composition the direction carries
    (d-1)/d of each step's budget since the same multiplier perturbs the
    magnitude and each of the d-1 angles.
    """
    if not (sigma > 0 and 0 < delta < 1 and steps >= 1):
        raise InvalidPrivacyParams(
            f"need sigma > 0, 0 < delta < 1, steps >= 1; got {sigma}, {delta}, {steps}"
        )
    if not 0 < beta <= 1:
        raise InvalidPrivacyParams(f"bounding factor must be in (0, 1], got {beta}")
    eps = math.sqrt(2.0 * math.log(1.25 / delta)) / sigma
    note = (
        f"direction bounded to a beta={beta:g} fraction of the angular range: "
        f"the direction component satisfies relaxed DP with delta' <= {1.0 - beta:g}; "
        "under composition the direction carries (d-1)/d of each step's budget"
    )
    return PrivacyReport(
        epsilon_per_step=eps,
        delta=delta,
        steps=steps,
        epsilon_total=steps * eps,
        delta_total=steps * delta,
        relaxation_note=note,
    )
