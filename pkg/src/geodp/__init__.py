"""Geometric gradient perturbation for differentially private SGD.

The package implements two per-step gradient perturbation mechanisms
behind a shared clipping front end: classic additive DP (noise on the
gradient components) and geometric DP (noise applied separately to the
gradient's magnitude and hyperspherical direction angles), together with
a logistic-regression trainer, error/efficiency metrics and an experiment
command line.
"""

__version__ = "0.1.0"

from geodp.hypersphere import (  # noqa: E402
    SphericalCoords,
    arctan2,
    canonicalize,
    to_cartesian,
    to_spherical,
)
from geodp.mechanisms import (  # noqa: E402
    PerturbConfig,
    PrivacyReport,
    average_clipped,
    clip_gradient,
    direction_sensitivity,
    dp_perturb,
    gaussian_sigma,
    geodp_perturb,
    privacy_report,
    sample_noise,
)

__all__ = [
    "SphericalCoords",
    "arctan2",
    "canonicalize",
    "to_cartesian",
    "to_spherical",
    "PerturbConfig",
    "PrivacyReport",
    "average_clipped",
    "clip_gradient",
    "direction_sensitivity",
    "dp_perturb",
    "gaussian_sigma",
    "geodp_perturb",
    "privacy_report",
    "sample_noise",
    "__version__",
]
