import numpy as np
import pytest
from scipy.integrate import quad

from wignersource import (
    bk_branch,
    bk_density,
    bk_support,
    make_measure,
    sine_correlation,
    sine_kernel,
    solve_pastur,
)


class TestBranch:
    def test_asymptotic_normalization(self):
        z = 1e6
        xi = bk_branch(z, 2.0)
        assert abs(xi - z) / z < 1e-5

    def test_gap_center_matches_fixed_point(self):
        # at the gap the branch is essentially real; it must agree with
        # z + m from the independent fixed-point solver
        a = np.sqrt(2.0)
        xi = bk_branch(0.0, a)
        assert abs(xi.imag) < 1e-6
        m = make_measure([(-a, 0.5), (a, 0.5)])
        sol = solve_pastur(m, 1e-8j)
        assert abs(xi - (sol.z + sol.m)) < 1e-6

    def test_interior_has_positive_imag(self):
        p = bk_support(2.0)
        x0 = 0.5 * (p.beta + p.alpha)
        assert bk_branch(x0, 2.0).imag > 0.1

    def test_rejects_small_a(self):
        with pytest.raises(ValueError):
            bk_branch(0.5, 0.9)


class TestDensity:
    def test_zero_in_gap(self):
        assert bk_density(0.0, 2.0) == 0.0

    def test_zero_outside(self):
        p = bk_support(2.0)
        assert bk_density(p.alpha + 1.0, 2.0) <= 1e-7

    def test_unit_mass_by_quadrature(self):
        p = bk_support(2.0)
        val, err = quad(lambda x: bk_density(x, 2.0), p.beta, p.alpha, limit=200)
        assert err < 1e-8
        assert 2 * val == pytest.approx(1.0, abs=1e-6)

    def test_even_symmetry(self):
        xs = np.array([0.9, 1.3, 2.2, 3.1, 4.0])
        assert np.allclose(bk_density(xs, 2.0), bk_density(-xs, 2.0), atol=1e-10)


class TestSupport:
    def test_a2_ordering(self):
        p = bk_support(2.0)
        assert p.alpha > p.beta > 0
        assert p.intervals[0][1] == -p.beta

    def test_agrees_with_solver_support(self, a2_support, a2_edges):
        (na, nb), (pb, pa) = a2_support.intervals
        assert pb == pytest.approx(a2_edges.beta, abs=1e-4)
        assert pa == pytest.approx(a2_edges.alpha, abs=1e-4)
        assert na == pytest.approx(-a2_edges.alpha, abs=1e-4)
        assert nb == pytest.approx(-a2_edges.beta, abs=1e-4)

    def test_near_critical_beta_vanishes(self):
        p = bk_support(1.0001)
        assert 0 < p.beta < 1e-3
        # at the critical point the outer edge tends to 3*sqrt(3)/2
        assert p.alpha == pytest.approx(3 * np.sqrt(3) / 2, abs=0.01)

    def test_single_interval_regime_rejected(self):
        with pytest.raises(ValueError, match="single-interval"):
            bk_support(0.5)

    def test_critical_value_rejected(self):
        with pytest.raises(ValueError, match="critical"):
            bk_support(1.0)

    def test_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            bk_support(-1.0)


class TestSineKernel:
    def test_diagonal_is_one(self):
        assert sine_kernel(0.3, 0.3) == 1.0

    def test_half_spacing(self):
        assert sine_kernel(0.0, 0.5) == pytest.approx(2 / np.pi)

    def test_integer_zeros(self):
        for k in (1, 2, 3):
            assert sine_kernel(0.0, float(k)) == pytest.approx(0.0, abs=1e-15)


class TestSineCorrelation:
    def test_single_point(self):
        assert sine_correlation([0.7]) == pytest.approx(1.0)

    def test_unit_spacing_pair(self):
        assert sine_correlation([0.0, 1.0]) == pytest.approx(1.0)

    def test_half_spacing_pair(self):
        assert sine_correlation([0.0, 0.5]) == pytest.approx(1 - (2 / np.pi) ** 2)

    def test_coincident_points_repel(self):
        assert abs(sine_correlation([0.0, 1e-6])) <= 1e-4
        assert abs(sine_correlation([0.3, 0.3 + 1e-6, 1.0])) <= 1e-4

    def test_nonnegative_on_random_points(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            pts = rng.uniform(-5, 5, rng.integers(1, 6))
            assert sine_correlation(pts) >= -1e-12

    def test_input_validation(self):
        with pytest.raises(ValueError):
            sine_correlation([])
