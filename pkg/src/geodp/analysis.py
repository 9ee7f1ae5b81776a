"""Error metrics and verification statistics for the perturbation mechanisms.

``ed_decompose``/``ed_direct`` evaluate the one-step efficiency
difference (the gap in squared distance to a reference optimum between a
noisy and a noise-free update) two ways: through its algebraic
decomposition into a noise-scale term and a noise/descent-trend inner
product, and by forming both updates explicitly.  They must agree to
rounding; ``ed_identity_max_error`` measures the worst disagreement over
random instances.

Direction errors compare angle vectors with the final angle's difference
wrapped into (-pi, pi]; interior angles live in [0, pi] and need no wrap.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.stats

from geodp import mechanisms
from geodp.errors import DegenerateFit, LengthMismatch, ShapeMismatch, TooFewSamples
from geodp.hypersphere import SphericalCoords, to_spherical, to_spherical_batch
from geodp.mechanisms import PerturbConfig, clip_gradient, direction_sensitivity

__all__ = [
    "EfficiencyBreakdown",
    "MseReport",
    "wrap_angle",
    "mse_directions",
    "mse_gradients",
    "model_efficiency",
    "ed_decompose",
    "ed_direct",
    "ed_identity_max_error",
    "bias_estimate",
    "normality_statistic",
    "ks_critical_value",
]


@dataclass(frozen=True)
class EfficiencyBreakdown:
    """Noise-scale term, noise/descent-trend term, and their sum."""

    item_a: float
    item_b: float

    @property
    def total(self) -> float:
        return self.item_a + self.item_b


@dataclass(frozen=True)
class MseReport:
    mse_direction: float
    mse_gradient: float
    sample_count: int


def wrap_angle(x):
    """Wrap angles (or angle differences) into (-pi, pi]."""
    w = np.remainder(x, 2.0 * np.pi)
    return np.where(w > np.pi, w - 2.0 * np.pi, w)


def _angle_matrix(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        out = np.atleast_2d(np.asarray(items, dtype=np.float64))
    else:
        out = np.asarray([np.asarray(s.angles, dtype=np.float64) for s in items])
    if out.ndim != 2 or out.shape[0] == 0:
        raise LengthMismatch("need at least one angle vector")
    return out


def mse_directions(originals, perturbed) -> float:
    """Mean squared angle-vector distance, last angle wrapped.

    Accepts lists of :class:`SphericalCoords` or plain (m, d-1) arrays.
    """
    a = _angle_matrix(originals)
    b = _angle_matrix(perturbed)
    if a.shape != b.shape:
        raise LengthMismatch(f"angle sets differ in shape: {a.shape} vs {b.shape}")
    diff = b - a
    diff[:, -1] = wrap_angle(diff[:, -1])
    return float(np.mean(np.einsum("ij,ij->i", diff, diff)))


def mse_gradients(originals, perturbed) -> float:
    """Mean squared Euclidean distance between paired gradient vectors."""
    a = np.atleast_2d(np.asarray(originals, dtype=np.float64))
    b = np.atleast_2d(np.asarray(perturbed, dtype=np.float64))
    if a.shape != b.shape or a.shape[0] == 0:
        raise LengthMismatch(f"gradient sets differ in shape: {a.shape} vs {b.shape}")
    diff = b - a
    return float(np.mean(np.einsum("ij,ij->i", diff, diff)))


def _weights(x) -> np.ndarray:
    w = getattr(x, "weights", x)
    return np.asarray(w, dtype=np.float64)


def model_efficiency(w, w_star) -> float:
    """Squared distance to the reference optimum, ||w - w_star||^2."""
    a = _weights(w)
    b = _weights(w_star)
    if a.shape != b.shape:
        raise ShapeMismatch(f"weight shapes differ: {a.shape} vs {b.shape}")
    d = a - b
    return float(d @ d)


def ed_decompose(
    w_t, w_star, g_clipped, n_sigma, learning_rate: float, clip: float, batch_size: int
) -> EfficiencyBreakdown:
    """Efficiency difference from its algebraic parts.

    item_a = eta^2 (2C/B <n, g> + C^2 ||n||^2 / B^2) carries the noise
    scale; item_b = (2 eta C / B) <n, w_star - w_t> carries the
    interaction with the remaining descent trend.  Taking the raw noise
    draw keeps the identity against :func:`ed_direct` exact instead of
    reconstructing the noise by subtraction.
    """
    wt = _weights(w_t)
    ws = _weights(w_star)
    g = np.asarray(g_clipped, dtype=np.float64)
    n = np.asarray(n_sigma, dtype=np.float64)
    if not (wt.shape == ws.shape == g.shape == n.shape):
        raise ShapeMismatch("w_t, w_star, gradient and noise must share one shape")
    eta, c, b = learning_rate, clip, batch_size
    item_a = eta * eta * (2.0 * c / b * float(n @ g) + c * c * float(n @ n) / (b * b))
    item_b = (2.0 * eta * c / b) * float(n @ (ws - wt))
    return EfficiencyBreakdown(item_a, item_b)


def ed_direct(w_t, w_star, g_clipped, g_perturbed, learning_rate: float) -> float:
    """Efficiency difference computed from both updates explicitly."""
    wt = _weights(w_t)
    ws = _weights(w_star)
    g = np.asarray(g_clipped, dtype=np.float64)
    gp = np.asarray(g_perturbed, dtype=np.float64)
    if not (wt.shape == ws.shape == g.shape == gp.shape):
        raise ShapeMismatch("w_t, w_star and gradients must share one shape")
    noisy = wt - learning_rate * gp - ws
    clean = wt - learning_rate * g - ws
    return float(noisy @ noisy) - float(clean @ clean)


def ed_identity_max_error(trials: int, dim: int, seed: int) -> float:
    """Worst relative gap between the two efficiency-difference routes.

    Each instance draws its own dimension in [2, dim], weights, clipped
    gradient and noise.  The relative gap uses the larger magnitude as
    denominator; values that agree below 1e-9 absolutely count as exact.
    """
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    if dim < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        d = int(rng.integers(2, dim + 1))
        w_t = rng.standard_normal(d)
        w_star = rng.standard_normal(d)
        clip = float(rng.uniform(0.5, 2.0))
        batch = int(rng.integers(1, 9))
        eta = float(rng.uniform(0.01, 1.0))
        g = clip_gradient(rng.standard_normal(d), clip)
        n = rng.standard_normal(d)
        g_pert = g + clip / batch * n
        direct = ed_direct(w_t, w_star, g, g_pert, eta)
        total = ed_decompose(w_t, w_star, g, n, eta, clip, batch).total
        scale = max(abs(direct), abs(total))
        if scale > 1e-9:
            worst = max(worst, abs(direct - total) / scale)
    return worst


_BIAS_CHUNK = 20_000


def bias_estimate(
    mechanism: str, g_clipped, cfg: PerturbConfig, trials: int, seed: int
) -> np.ndarray:
    """Monte Carlo mean deviation of perturbed direction angles.

    For ``dp`` the perturbed angles are read off the noisy gradient (the
    only angle view that mechanism has), so they are canonical.  For
    ``geodp`` the mechanism's own raw angle perturbation is averaged,
    which is the representation its noise is unbiased in.  The last
    angle's deviation is wrapped into (-pi, pi] in both cases.
    """
    if trials < 100:
        raise ValueError(f"need at least 100 trials for a usable estimate, got {trials}")
    g = np.asarray(g_clipped, dtype=np.float64)
    coords = to_spherical(g)
    rng = np.random.default_rng(seed)

    if mechanism == "geodp":
        scale = direction_sensitivity(cfg.dim, cfg.beta) * cfg.sigma / cfg.batch_size
        total = np.zeros(cfg.dim - 1)
        done = 0
        while done < trials:
            m = min(_BIAS_CHUNK, trials - done)
            noisy = coords.angles + scale * rng.standard_normal((m, cfg.dim - 1))
            diff = noisy - coords.angles
            diff[:, -1] = wrap_angle(diff[:, -1])
            total += diff.sum(axis=0)
            done += m
        return total / trials

    if mechanism == "dp":
        total = np.zeros(cfg.dim - 1)
        done = 0
        while done < trials:
            m = min(_BIAS_CHUNK, trials - done)
            pert = mechanisms.dp_perturb_batch(np.broadcast_to(g, (m, g.size)), cfg, rng)
            _, angles = to_spherical_batch(pert)
            diff = angles - coords.angles
            diff[:, -1] = wrap_angle(diff[:, -1])
            total += diff.sum(axis=0)
            done += m
        return total / trials

    raise ValueError(f"mechanism must be 'dp' or 'geodp', got {mechanism!r}")


def normality_statistic(samples) -> float:
    """Kolmogorov-Smirnov distance to a Gaussian fitted by moments."""
    x = np.asarray(samples, dtype=np.float64).ravel()
    if x.size < 50:
        raise TooFewSamples(f"need >= 50 samples, got {x.size}")
    mean = float(x.mean())
    std = float(x.std())
    # identical samples leave only mean-subtraction rounding in the std
    if std <= 1e-12 * max(1.0, abs(mean)):
        raise DegenerateFit("all samples identical; no Gaussian fit exists")
    return float(scipy.stats.kstest(x, "norm", args=(mean, std)).statistic)


def ks_critical_value(n: int, alpha: float = 0.01) -> float:
    """Asymptotic Kolmogorov-Smirnov critical value at significance alpha."""
    if n < 1 or not 0 < alpha < 1:
        raise ValueError(f"need n >= 1 and 0 < alpha < 1, got {n}, {alpha}")
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) / math.sqrt(n)
