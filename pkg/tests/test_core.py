import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import special

from lpdepth.core import LpModel, density_from_depth, depth, log_density_from_depth, lp_constant, lp_norm
from lpdepth.errors import DomainError, SingularityError

from oracles import ep_density, ep_depth_pdf


class TestLpNorm:
    def test_euclidean(self):
        assert lp_norm([3.0, 4.0], 2) == pytest.approx(5.0, rel=1e-15)

    def test_l1(self):
        assert lp_norm([1.0, -2.0], 1) == pytest.approx(3.0, rel=1e-15)

    def test_l4_ones(self):
        assert lp_norm([1.0, 1.0], 4) == pytest.approx(2 ** 0.25, rel=1e-14)

    def test_zero_vector(self):
        assert lp_norm([0.0, 0.0, 0.0], 3.5) == 0.0

    def test_large_exponent_no_overflow(self):
        v = lp_norm([1e200, 1e200], 64)
        assert v == pytest.approx(1e200 * 2 ** (1 / 64), rel=1e-12)

    def test_tiny_entries_no_underflow(self):
        assert lp_norm([1e-200, 0.0], 20) == pytest.approx(1e-200, rel=1e-12)

    def test_rowwise(self):
        out = lp_norm(np.array([[3.0, 4.0], [6.0, 8.0]]), 2)
        np.testing.assert_allclose(out, [5.0, 10.0])

    @pytest.mark.parametrize("p", [0.5, 0.0, -1.0, math.nan, math.inf])
    def test_bad_p(self, p):
        with pytest.raises(DomainError):
            lp_norm([1.0], p)

    def test_empty(self):
        with pytest.raises(DomainError):
            lp_norm([], 2)


class TestLpModel:
    def test_singular_transform(self):
        with pytest.raises(SingularityError):
            LpModel(2, [0, 0], [[1, 2], [2, 4]])

    def test_shape_mismatch(self):
        with pytest.raises(DomainError):
            LpModel(2, [0, 0, 0], np.eye(2))

    def test_arrays_read_only(self):
        m = LpModel(2, [0, 0], np.eye(2))
        with pytest.raises(ValueError):
            m.A[0, 0] = 3

    def test_abs_det(self):
        assert LpModel(1, [0, 0], [[0, 2], [3, 0]]).abs_det_A == pytest.approx(6.0)


class TestDepth:
    def test_center_has_depth_one(self):
        m = LpModel(1.7, [0.3, -2.0], [[2, 1], [0, 1]])
        assert depth(m.b, m) == 1.0

    def test_euclidean_example(self):
        assert depth([3.0, 4.0], LpModel(2, [0, 0], np.eye(2))) == pytest.approx(1 / 6)

    def test_scaled_l1_example(self):
        m = LpModel(1, [0, 0], np.diag([1, 1 / 0.3]))
        assert depth([1.0, 0.3], m) == pytest.approx(1 / 3, rel=1e-14)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            depth([1.0, 2.0, 3.0], LpModel(2, [0, 0], np.eye(2)))


class TestConstant:
    @pytest.mark.parametrize(
        "p,d,want", [(1, 1, 0.5), (2, 2, 1 / (2 * math.pi)), (1, 2, 0.25)]
    )
    def test_closed_forms(self, p, d, want):
        assert lp_constant(p, d) == pytest.approx(want, rel=1e-14)

    @pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.3, 8.0, 22.6])
    @pytest.mark.parametrize("d", [1, 2, 3, 5])
    def test_against_scipy_gamma(self, p, d):
        want = p ** (d - 1) * special.gamma(d / p) / (2**d * special.gamma(1 / p) ** d)
        assert lp_constant(p, d) == pytest.approx(want, rel=1e-13)


class TestDensityFromDepth:
    def test_laplace_1d(self):
        m = LpModel(1, [0.0], [[1.0]])
        delta = 1 / 3
        g = math.exp(-(1 / delta - 1)) / delta**2
        assert density_from_depth(delta, g, m) == pytest.approx(0.5 * math.exp(-2), rel=1e-14)

    def test_zero_g(self):
        assert density_from_depth(0.4, 0.0, LpModel(2, [0, 0], np.eye(2))) == 0.0

    def test_gaussian_2d_at_unit_radius(self):
        m = LpModel(2, [0, 0], np.eye(2))
        delta = 0.5
        g = ep_depth_pdf(delta, 2, 2, sigma=2.0)
        want = math.exp(-0.5) / (2 * math.pi)
        assert density_from_depth(delta, g, m) == pytest.approx(want, rel=1e-10)

    def test_depth_one_allowed_in_1d(self):
        m = LpModel(1, [0.0], [[1.0]])
        assert density_from_depth(1.0, 1.0, m) == pytest.approx(0.5)

    def test_depth_one_singular_in_2d(self):
        with pytest.raises(SingularityError):
            density_from_depth(1.0, 1.0, LpModel(2, [0, 0], np.eye(2)))

    @pytest.mark.parametrize("bad", [0.0, -0.1, 1.2])
    def test_depth_out_of_range(self, bad):
        with pytest.raises(DomainError):
            density_from_depth(bad, 1.0, LpModel(2, [0.0], [[1.0]]))

    def test_negative_g(self):
        with pytest.raises(DomainError):
            density_from_depth(0.5, -1.0, LpModel(2, [0.0], [[1.0]]))

    def test_log_version_matches(self):
        m = LpModel(3, [1, 2], [[1, 0.5], [0, 2]])
        delta = np.array([0.1, 0.5, 0.9])
        g = np.array([0.2, 1.3, 4.0])
        np.testing.assert_allclose(
            np.exp(log_density_from_depth(delta, np.log(g), m)), density_from_depth(delta, g, m), rtol=1e-13
        )

    @pytest.mark.parametrize("a0", [0.25, 3.0])
    def test_rescaled_transform(self, a0):
        # with depths from a0*A and the density of those depths, the
        # identity carries an extra a0^d through |det(a0 A)|
        rng = np.random.default_rng(5)
        A = np.array([[1.0, 0.4], [-0.3, 2.0]])
        b = np.array([0.5, -1.0])
        x = rng.normal(size=(20, 2))
        truth = ep_density(x, 1.5, b, A)
        m_scaled = LpModel(1.5, b, a0 * A)
        m_orig = LpModel(1.5, b, A)
        dt = depth(x, m_scaled)
        g = ep_depth_pdf(dt, 1.5, 2, a0=a0)
        np.testing.assert_allclose(density_from_depth(dt, g, m_scaled), truth, rtol=1e-10)
        np.testing.assert_allclose(a0**2 * density_from_depth(dt, g, m_orig), truth, rtol=1e-10)


@given(
    z=st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=6),
    w=st.lists(st.floats(-1e6, 1e6), min_size=6, max_size=6),
    c=st.floats(-1e3, 1e3),
    p=st.sampled_from([2 ** ((i - 1) / 2) for i in range(1, 11)]),
)
def test_norm_axioms(z, w, c, p):
    z = np.array(z)
    w = np.array(w[: z.size])
    nz = lp_norm(z, p)
    assert nz >= 0
    assert (nz == 0) == bool(np.all(z == 0))
    assert lp_norm(c * z, p) == pytest.approx(abs(c) * nz, rel=1e-12, abs=1e-300)
    assert lp_norm(z + w, p) <= (nz + lp_norm(w, p)) * (1 + 1e-12) + 1e-300
    assert lp_norm(z, 2 * p) <= nz * (1 + 1e-12) + 1e-300
