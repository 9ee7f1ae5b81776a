import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from geodp.errors import ShapeMismatch, UndefinedAngle, ZeroVector
from geodp.hypersphere import (
    SphericalCoords,
    arctan2,
    canonicalize,
    to_cartesian,
    to_cartesian_batch,
    to_spherical,
    to_spherical_batch,
)

SQRT3 = math.sqrt(3.0)


class TestArctan2:
    def test_first_quadrant_ratio(self):
        # direction of the gradient (1, sqrt(3)) is pi/3
        assert arctan2(SQRT3, 1.0) == pytest.approx(math.pi / 3, abs=1e-15)

    def test_positive_y_axis(self):
        assert arctan2(1.0, 0.0) == math.pi / 2

    def test_negative_x_axis_gives_pi(self):
        # case "x < 0, y >= 0": arctan(0) + pi
        assert arctan2(0.0, -1.0) == math.pi

    def test_negative_zero_y_stays_in_range(self):
        assert arctan2(-0.0, -1.0) == math.pi

    def test_undefined_at_origin(self):
        with pytest.raises(UndefinedAngle):
            arctan2(0.0, 0.0)

    @given(st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
    def test_range(self, y, x):
        if x == 0.0 and y == 0.0:
            return
        a = arctan2(y, x)
        assert -math.pi < a <= math.pi


class TestToSpherical:
    def test_worked_example(self):
        s = to_spherical([1.0, SQRT3])
        assert s.magnitude == pytest.approx(2.0, rel=1e-15)
        assert s.angles[0] == pytest.approx(math.pi / 3, abs=1e-15)

    def test_unit_vector_along_second_axis(self):
        s = to_spherical([0.0, 1.0, 0.0])
        assert s.magnitude == 1.0
        np.testing.assert_allclose(s.angles, [math.pi / 2, 0.0], atol=1e-15)

    def test_round_trip_d50(self):
        g = np.random.default_rng(50).normal(size=50)
        back = to_cartesian(to_spherical(g))
        np.testing.assert_allclose(back, g, atol=1e-12 * np.linalg.norm(g))

    def test_zero_vector_rejected(self):
        with pytest.raises(ZeroVector):
            to_spherical(np.zeros(4))

    def test_d1_rejected(self):
        with pytest.raises(ShapeMismatch):
            to_spherical(np.ones(1))

    def test_nan_rejected(self):
        with pytest.raises(ValueError):
            to_spherical([1.0, float("nan")])

    def test_axis_aligned_round_trips(self):
        # vectors with zero suffixes exercise the unconstrained-angle convention
        for d in (2, 3, 5):
            for axis in range(d):
                for sign in (1.0, -1.0):
                    g = np.zeros(d)
                    g[axis] = sign
                    back = to_cartesian(to_spherical(g))
                    np.testing.assert_allclose(back, g, atol=1e-15)


class TestToCartesian:
    def test_worked_example_inverse(self):
        g = to_cartesian(SphericalCoords(2.0, np.array([math.pi / 3])))
        np.testing.assert_allclose(g, [1.0, SQRT3], rtol=1e-15)

    def test_zero_magnitude(self):
        g = to_cartesian(SphericalCoords(0.0, np.array([0.3, -2.0, 9.0])))
        np.testing.assert_array_equal(g, np.zeros(4))

    def test_product_of_sines_hand_case(self):
        # d=3: (cos t1, sin t1 cos t2, sin t1 sin t2)
        g = to_cartesian(SphericalCoords(1.0, np.array([math.pi / 2, 0.0])))
        np.testing.assert_allclose(g, [0.0, 1.0, 0.0], atol=1e-15)

    def test_accepts_non_canonical_angles(self):
        g = to_cartesian(SphericalCoords(1.5, np.array([-4.0, 17.0])))
        assert np.isfinite(g).all()

    def test_negative_magnitude_mirrors(self):
        s = SphericalCoords(-2.0, np.array([0.4, 1.1]))
        np.testing.assert_allclose(
            to_cartesian(s), -to_cartesian(SphericalCoords(2.0, s.angles)), rtol=1e-15
        )


class TestCanonicalize:
    def test_already_canonical(self):
        s = canonicalize(SphericalCoords(1.0, np.array([math.pi / 4])))
        assert s.magnitude == pytest.approx(1.0, rel=1e-15)
        assert s.angles[0] == pytest.approx(math.pi / 4, rel=1e-12)

    def test_wrapped_circle_angle(self):
        s = canonicalize(SphericalCoords(1.0, np.array([9 * math.pi / 4])))
        assert s.angles[0] == pytest.approx(math.pi / 4, rel=1e-12)

    def test_same_point_d3(self):
        raw = SphericalCoords(1.0, np.array([-math.pi / 2, 0.3]))
        canon = canonicalize(raw)
        np.testing.assert_allclose(to_cartesian(canon), to_cartesian(raw), atol=1e-12)
        assert 0.0 <= canon.angles[0] <= math.pi
        assert -math.pi < canon.angles[-1] <= math.pi

    def test_zero_point(self):
        s = canonicalize(SphericalCoords(0.0, np.array([1.0, 2.0])))
        assert s.magnitude == 0.0
        np.testing.assert_array_equal(s.angles, np.zeros(2))


@st.composite
def nonzero_gradients(draw):
    # zeros exercise the axis conventions; magnitudes stay far from the
    # subnormal range where squaring loses information
    d = draw(st.integers(2, 40))
    elements = st.one_of(st.just(0.0), st.floats(1e-6, 100.0), st.floats(-100.0, -1e-6))
    g = draw(arrays(np.float64, d, elements=elements))
    if np.linalg.norm(g) < 1e-6:
        g = g + np.eye(d)[0]
    return g


class TestInvariants:
    @settings(max_examples=200, deadline=None)
    @given(nonzero_gradients())
    def test_round_trip(self, g):
        nrm = np.linalg.norm(g)
        back = to_cartesian(to_spherical(g))
        assert np.linalg.norm(back - g) <= 1e-9 * nrm

    @settings(max_examples=200, deadline=None)
    @given(nonzero_gradients())
    def test_norm_preservation(self, g):
        s = to_spherical(g)
        assert s.magnitude == pytest.approx(np.linalg.norm(g), rel=1e-12)
        assert np.linalg.norm(to_cartesian(s)) == pytest.approx(s.magnitude, rel=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(nonzero_gradients())
    def test_canonical_ranges(self, g):
        ang = to_spherical(g).angles
        assert (ang[:-1] >= 0.0).all() and (ang[:-1] <= math.pi).all()
        assert -math.pi < ang[-1] <= math.pi

    @settings(max_examples=100, deadline=None)
    @given(nonzero_gradients(), st.sampled_from([2.0**-8, 0.25, 2.0, 2.0**9]))
    def test_scale_invariance_power_of_two(self, g, c):
        # power-of-two scaling is exact in binary floating point
        np.testing.assert_array_equal(to_spherical(c * g).angles, to_spherical(g).angles)

    @settings(max_examples=100, deadline=None)
    @given(nonzero_gradients(), st.floats(1e-3, 1e3))
    def test_scale_invariance_general(self, g, c):
        # general scales perturb each component by an ulp; angles follow suit
        np.testing.assert_allclose(
            to_spherical(c * g).angles, to_spherical(g).angles, atol=1e-9
        )


class TestBatch:
    def test_matches_scalar_path(self):
        g = np.random.default_rng(3).normal(size=(64, 9))
        mag, ang = to_spherical_batch(g)
        for i in range(g.shape[0]):
            s = to_spherical(g[i])
            assert mag[i] == s.magnitude
            np.testing.assert_array_equal(ang[i], s.angles)
        back = to_cartesian_batch(mag, ang)
        np.testing.assert_allclose(back, g, atol=1e-12)

    def test_zero_row_flagged(self):
        g = np.ones((3, 4))
        g[1] = 0.0
        with pytest.raises(ZeroVector, match="row 1"):
            to_spherical_batch(g)

    def test_large_dimension_round_trip(self):
        g = np.random.default_rng(9).normal(size=(4, 5000))
        mag, ang = to_spherical_batch(g)
        back = to_cartesian_batch(mag, ang)
        err = np.linalg.norm(back - g, axis=1) / np.linalg.norm(g, axis=1)
        assert err.max() <= 1e-9

    def test_hundred_thousand_dimension_round_trip(self):
        # cumulative sine products lose precision slowly; the bound loosens
        g = np.random.default_rng(10).normal(size=(2, 100_000))
        mag, ang = to_spherical_batch(g)
        back = to_cartesian_batch(mag, ang)
        err = np.linalg.norm(back - g, axis=1) / np.linalg.norm(g, axis=1)
        assert err.max() <= 1e-6
