"""Pure-numpy conversion kernels (fallback backend).

Semantics are identical to the compiled kernels in ``_convert_fast``:
row-wise conversion of ``(n, d)`` float64 arrays between rectangular and
hyperspherical coordinates.  Results may differ from the compiled path by
a few ulps because the intermediate products associate differently.
"""

import numpy as np


def cart_to_sph(g):
    """Convert rows of ``g`` to (magnitudes, angles).

    ``g`` must be a C-contiguous float64 array of shape ``(n, d)`` with
    d >= 2.  Returns ``(mag, ang)`` with shapes ``(n,)`` and ``(n, d-1)``.
    Interior angles fall in [0, pi]; the last angle in (-pi, pi].  Where a
    whole coordinate suffix is zero the angle is unconstrained and 0.0 is
    emitted, so every nonzero row round-trips.
    """
    n, d = g.shape
    sq = g * g
    # suffix[:, z] = sum of squares of components z..d-1
    suffix = np.cumsum(sq[:, ::-1], axis=1)[:, ::-1]
    mag = np.sqrt(suffix[:, 0])

    ang = np.empty((n, d - 1))
    if d > 2:
        y = np.sqrt(suffix[:, 1 : d - 1])
        x = g[:, : d - 2]
        interior = np.arctan2(y, x)
        interior[(y == 0.0) & (x == 0.0)] = 0.0
        ang[:, : d - 2] = interior

    ylast = g[:, d - 1]
    xlast = g[:, d - 2]
    last = np.arctan2(ylast, xlast)
    # atan2 yields -pi for (-0.0, x<0) and for rounded tiny negatives; the
    # canonical range is half-open at -pi.
    last[last == -np.pi] = np.pi
    last[(ylast == 0.0) & (xlast == 0.0)] = 0.0
    ang[:, d - 2] = last
    return mag, ang


def sph_to_cart(mag, ang):
    """Inverse of :func:`cart_to_sph`; total for finite inputs.

    ``mag`` has shape ``(n,)``, ``ang`` shape ``(n, d-1)``; returns
    ``(n, d)``.  Angles need not be canonical.
    """
    n, dm1 = ang.shape
    sins = np.sin(ang)
    coss = np.cos(ang)
    prods = np.cumprod(sins, axis=1)

    out = np.empty((n, dm1 + 1))
    out[:, 0] = mag * coss[:, 0]
    if dm1 > 1:
        out[:, 1:dm1] = mag[:, None] * prods[:, : dm1 - 1] * coss[:, 1:]
    out[:, dm1] = mag * prods[:, dm1 - 1]
    return out
