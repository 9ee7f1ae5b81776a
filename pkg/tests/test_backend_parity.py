"""The compiled kernels and the numpy fallback must agree."""

import numpy as np
import pytest

from geodp import _convert_ref

fast = pytest.importorskip("geodp._convert_fast")


@pytest.mark.parametrize("d", [2, 3, 17, 400])
def test_cart_to_sph_parity(d):
    g = np.ascontiguousarray(np.random.default_rng(d).normal(size=(200, d)))
    mag_f, ang_f = fast.cart_to_sph(g)
    mag_r, ang_r = _convert_ref.cart_to_sph(g)
    np.testing.assert_allclose(mag_f, mag_r, rtol=1e-15)
    np.testing.assert_allclose(ang_f, ang_r, atol=1e-13)


@pytest.mark.parametrize("d", [2, 3, 17, 400])
def test_sph_to_cart_parity(d):
    rng = np.random.default_rng(d + 1)
    mag = np.abs(rng.normal(size=150)) + 0.1
    ang = np.ascontiguousarray(rng.uniform(-4, 4, size=(150, d - 1)))
    out_f = fast.sph_to_cart(mag, ang)
    out_r = _convert_ref.sph_to_cart(mag, ang)
    np.testing.assert_allclose(out_f, out_r, atol=1e-13)


def test_edge_conventions_match():
    # axis-aligned rows and signed zeros resolve to exact constants
    # (0, pi/2, pi), so the two backends must agree bit for bit there
    rows = np.array(
        [
            [1.0, 0.0, 0.0],  # zero suffix
            [-1.0, 0.0, 0.0],
            [0.0, -1.0, 0.0],
            [0.0, 0.0, -1.0],
            [1.0, -0.0, -0.0],  # negative zeros
        ]
    )
    mag_f, ang_f = fast.cart_to_sph(rows)
    mag_r, ang_r = _convert_ref.cart_to_sph(rows)
    np.testing.assert_array_equal(mag_f, mag_r)
    np.testing.assert_array_equal(ang_f, ang_r)
