"""Hermite functions and Gauss-Hermite quadrature.

Oracles: closed forms for psi_0, psi_1, psi_2; analytic Gaussian moments
Gamma(j + 1/2); the classical 5-point Gauss-Hermite rule; and numpy's
independent hermgauss implementation.
"""

import math

import numpy as np
import pytest
from scipy.special import gamma

from hermloc.hermite import (
    MAX_RULE_SIZE,
    QuadratureRule,
    gauss_hermite_rule,
    hermite_matrix,
    hermite_row,
    psi_at_zero,
    psi_zero_even,
    quad_integrate,
)

PI_M14 = math.pi ** -0.25


def psi0_direct(x: float) -> float:
    return PI_M14 * math.exp(-x * x / 2.0)


def psi1_direct(x: float) -> float:
    return math.sqrt(2.0) * PI_M14 * x * math.exp(-x * x / 2.0)


def psi2_direct(x: float) -> float:
    # h_2(x) = (2 x^2 - 1) / sqrt(2) * pi^{-1/4}
    return PI_M14 * (2.0 * x * x - 1.0) / math.sqrt(2.0) * math.exp(-x * x / 2.0)


class TestRecurrence:
    def test_low_degrees_match_closed_forms(self):
        for x in [-2.5, -1.0, 0.0, 0.3, 1.5, 4.0]:
            row = hermite_row(2, x).values
            assert row[0] == pytest.approx(psi0_direct(x), abs=1e-15)
            assert row[1] == pytest.approx(psi1_direct(x), abs=1e-15)
            assert row[2] == pytest.approx(psi2_direct(x), abs=1e-15)

    def test_frozen_row_at_1p5(self):
        row = hermite_row(4, 1.5).values
        want = [
            0.24385476130642741,
            0.5172940660332053,
            0.6035097437054061,
            0.31677662718773497,
            -0.186662417671542,
        ]
        np.testing.assert_allclose(row, want, rtol=0, atol=1e-15)

    def test_matrix_agrees_with_rows(self):
        xs = np.array([-1.7, 0.0, 0.4, 2.2])
        mat = hermite_matrix(12, xs)
        for i, x in enumerate(xs):
            np.testing.assert_array_equal(mat[i], hermite_row(12, float(x)).values)

    def test_uniform_bound_holds(self):
        # sup_x |psi_k(x)| is maximized at k=0; 1.1 is a safe envelope
        xs = np.linspace(-25.0, 25.0, 4001)
        mat = hermite_matrix(200, xs)
        assert np.max(np.abs(mat)) <= 1.1

    def test_high_degree_stays_finite(self):
        vals = hermite_row(5000, 30.0).values
        assert np.all(np.isfinite(vals))
        vals = hermite_row(5000, 0.0).values
        assert np.all(np.isfinite(vals))

    def test_validation(self):
        with pytest.raises(ValueError):
            hermite_matrix(-1, np.zeros(3))
        with pytest.raises(ValueError):
            hermite_matrix(5001, np.zeros(3))
        with pytest.raises(ValueError):
            hermite_matrix(3, np.array([[0.0, 1.0]]))
        with pytest.raises(ValueError):
            hermite_row(3, math.inf)


class TestPsiAtZero:
    def test_frozen_values(self):
        assert psi_at_zero(0) == pytest.approx(0.7511255444649425, abs=1e-16)
        assert psi_at_zero(2) == pytest.approx(-0.5311259660135985, abs=1e-15)
        assert psi_at_zero(4) == pytest.approx(0.45996857917732675, abs=1e-15)

    def test_odd_degrees_vanish(self):
        for ell in [1, 3, 5, 99]:
            assert psi_at_zero(ell) == 0.0

    def test_matches_recurrence(self):
        row = hermite_row(60, 0.0).values
        for ell in range(61):
            assert psi_at_zero(ell) == pytest.approx(row[ell], abs=1e-13)

    def test_vector_form(self):
        vec = psi_zero_even(12)
        for l in range(12):
            assert vec[l] == pytest.approx(psi_at_zero(2 * l), abs=1e-14)

    def test_sign_alternates(self):
        vec = psi_zero_even(10)
        assert np.all(np.sign(vec) == [(-1.0) ** l for l in range(10)])

    def test_validation(self):
        with pytest.raises(ValueError):
            psi_at_zero(-2)
        with pytest.raises(ValueError):
            psi_zero_even(0)


class TestGaussHermiteRule:
    def test_frozen_five_point_rule(self):
        rule = gauss_hermite_rule(5)
        want_nodes = [
            -2.020182870456084,
            -0.9585724646138176,
            0.0,
            0.9585724646138176,
            2.020182870456084,
        ]
        want_weights = [
            0.019953242059046035,
            0.39361932315224146,
            0.9453087204829409,
            0.39361932315224146,
            0.019953242059046035,
        ]
        np.testing.assert_allclose(rule.nodes, want_nodes, rtol=0, atol=1e-14)
        np.testing.assert_allclose(rule.weights, want_weights, rtol=1e-13, atol=0)

    def test_exact_symmetry_and_normalization(self):
        for m in [2, 7, 16, 64]:
            rule = gauss_hermite_rule(m)
            np.testing.assert_array_equal(rule.nodes, -rule.nodes[::-1])
            np.testing.assert_array_equal(rule.weights, rule.weights[::-1])
            assert np.all(rule.weights > 0)
            assert math.fsum(rule.weights.tolist()) == pytest.approx(
                math.sqrt(math.pi), abs=5e-16
            )

    def test_against_independent_implementation(self):
        for m in [10, 64, 256]:
            rule = gauss_hermite_rule(m)
            nodes, weights = np.polynomial.hermite.hermgauss(m)
            np.testing.assert_allclose(rule.nodes, nodes, rtol=0, atol=2e-14)
            np.testing.assert_allclose(rule.weights, weights, rtol=5e-13, atol=0)

    def test_moments_match_gamma(self):
        # integral x^{2j} exp(-x^2) dx = Gamma(j + 1/2)
        rule = gauss_hermite_rule(20)
        for j in range(20):
            got = quad_integrate(rule, lambda x, j=j: x ** (2 * j))
            assert got == pytest.approx(float(gamma(j + 0.5)), rel=1e-13)

    def test_odd_moments_vanish(self):
        # x * (x*x)**(j-1) evaluates with exact odd parity, so the
        # symmetrized rule cancels it to exactly zero under fsum
        rule = gauss_hermite_rule(12)
        for j in [1, 3, 11]:
            got = quad_integrate(rule, lambda x, j=j: x * (x * x) ** (j - 1))
            assert got == 0.0

    def test_degree_boundary(self):
        # degree 2m fails, degree 2m-1 is exact: the defining property
        m = 6
        rule = gauss_hermite_rule(m)
        exact = quad_integrate(rule, lambda x: x ** (2 * m - 2))
        assert exact == pytest.approx(float(gamma(m - 0.5)), rel=1e-13)
        beyond = quad_integrate(rule, lambda x: x ** (2 * m))
        assert abs(beyond - float(gamma(m + 0.5))) > 1e-6

    def test_validation(self):
        with pytest.raises(ValueError):
            gauss_hermite_rule(0)
        with pytest.raises(ValueError):
            gauss_hermite_rule(MAX_RULE_SIZE + 1)
        with pytest.raises(ValueError):
            gauss_hermite_rule(2.5)


class TestQuadIntegrate:
    def test_weightless_orthonormality(self):
        # integral psi_j psi_k dx = delta_jk via exp(x^2)-inflated weights
        rule = gauss_hermite_rule(64)
        mat = hermite_matrix(10, rule.nodes)
        for j in range(11):
            for k in range(j, 11):
                got = quad_integrate(
                    rule, lambda x, j=j, k=k: mat[:, j] * mat[:, k], weightless=True
                )
                assert got == pytest.approx(1.0 if j == k else 0.0, abs=1e-13)

    def test_weightless_gaussian_mass(self):
        # plain integral of exp(-2 x^2) is sqrt(pi/2); the weightless sum
        # reduces to the plain rule applied to exp(-x^2), which converges fast
        rule = gauss_hermite_rule(32)
        got = quad_integrate(rule, lambda x: np.exp(-2.0 * x * x), weightless=True)
        assert got == pytest.approx(math.sqrt(math.pi / 2.0), rel=1e-12)

    def test_rejects_bad_return_shapes(self):
        rule = gauss_hermite_rule(8)
        with pytest.raises(ValueError):
            quad_integrate(rule, lambda x: np.zeros(3))
        with pytest.raises(ValueError):
            quad_integrate(rule, lambda x: x * math.nan)

    def test_single_point_rule(self):
        rule = gauss_hermite_rule(1)
        assert rule.nodes[0] == 0.0 and rule.weights[0] == math.sqrt(math.pi)
        assert quad_integrate(rule, lambda x: np.ones_like(x)) == math.sqrt(math.pi)
