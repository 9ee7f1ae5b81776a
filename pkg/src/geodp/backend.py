"""Selects the conversion kernels at import time.

The compiled extension is preferred; the numpy fallback keeps the package
usable from a pure checkout.  ``GEODP_BACKEND=cython|numpy`` forces a
choice (useful for the parity tests and the benchmark).
"""

import os

from geodp import _convert_ref

_forced = os.environ.get("GEODP_BACKEND")
if _forced not in (None, "", "cython", "numpy"):
    raise ImportError(f"GEODP_BACKEND must be 'cython' or 'numpy', got {_forced!r}")

if _forced == "numpy":
    _impl = _convert_ref
    BACKEND = "numpy"
else:
    try:
        from geodp import _convert_fast as _impl

        BACKEND = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        _impl = _convert_ref
        BACKEND = "numpy"

cart_to_sph = _impl.cart_to_sph
sph_to_cart = _impl.sph_to_cart


def backend_name():
    """Name of the kernel implementation in use ('cython' or 'numpy')."""
    return BACKEND
