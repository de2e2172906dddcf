import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from faircurves.numerics import (
    NonConvergenceError,
    NumericsDomainError,
    ToleranceConfig,
    bracket_root,
    gauss_2f1,
    integrate,
)

# frozen from a 1e6-panel midpoint-rule oracle (exact value is 0)
SIN50_ORACLE = 3.459965550024563e-18
# frozen from a 200-term exact-rational Pfaff series (Fraction arithmetic)
F21_ORACLE = 0.8069428416119637


def midpoint_oracle(f, a, b, n=1_000_000):
    xs = (np.arange(n) + 0.5) * ((b - a) / n) + a
    return (b - a) / n * np.sum(f(xs))


def rational_series_oracle():
    """Exact-rational Pfaff series for 2F1(0.3, 0.7; 1.4; -2.5), 200 terms."""
    a, b, c = Fraction(3, 10), Fraction(7, 10), Fraction(14, 10)
    z = Fraction(-5, 2)
    w = z / (z - 1)
    term = Fraction(1)
    total = Fraction(1)
    for n in range(200):
        term *= (a + n) * ((c - b) + n) * w / ((c + n) * (n + 1))
        total += term
    return float(1 - z) ** float(-a) * float(total)


class TestIntegrate:
    def test_polynomial_exact(self):
        r = integrate(lambda x: x * x, 0.0, 1.0)
        assert abs(r.value - 1.0 / 3.0) < 1e-12
        assert r.subdivisions >= 1
        assert r.error_estimate >= 0

    def test_closed_form_antiderivative(self):
        r = integrate(lambda t: (1.0 + t) ** -0.5, 0.0, 3.0)
        assert abs(r.value - 2.0) < 1e-12

    def test_oscillatory_matches_midpoint_oracle(self):
        r = integrate(lambda x: math.sin(50.0 * x), 0.0, math.pi)
        oracle = midpoint_oracle(lambda x: np.sin(50.0 * x), 0.0, math.pi)
        assert abs(oracle - SIN50_ORACLE) < 1e-12
        assert abs(r.value - SIN50_ORACLE) < 1e-9

    def test_empty_interval(self):
        assert integrate(math.sin, 2.0, 2.0).value == 0.0

    def test_reversed_bounds_rejected(self):
        with pytest.raises(NumericsDomainError):
            integrate(math.sin, 1.0, 0.0)

    def test_nan_integrand_rejected(self):
        with pytest.raises(NumericsDomainError):
            integrate(lambda x: float("nan"), 0.0, 1.0)

    def test_nonconvergence_carries_best_estimate(self):
        cfg = ToleranceConfig(abs_tol=1e-15, rel_tol=1e-15, max_subdivisions=3)
        with pytest.raises(NonConvergenceError) as err:
            integrate(lambda x: abs(x - math.pi / 7) ** 0.3, 0.0, 1.0, cfg)
        assert math.isfinite(err.value.best)
        assert err.value.subdivisions == 3

    @settings(max_examples=20, deadline=None)
    @given(
        st.lists(st.floats(-3, 3), min_size=1, max_size=4),
        st.lists(st.floats(-3, 3), min_size=1, max_size=4),
        st.floats(-2, 2),
        st.floats(-2, 2),
    )
    def test_linearity(self, cf, cg, alpha, beta):
        f = np.polynomial.Polynomial(cf)
        g = np.polynomial.Polynomial(cg)
        combo = integrate(lambda x: alpha * f(x) + beta * g(x), 0.0, 1.5).value
        parts = alpha * integrate(f, 0.0, 1.5).value + beta * integrate(g, 0.0, 1.5).value
        assert abs(combo - parts) < 10 * 1e-10 * max(1.0, abs(combo))

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.05, 0.95))
    def test_interval_additivity(self, split):
        f = lambda x: math.exp(-x) * math.sin(3 * x)
        whole = integrate(f, 0.0, 1.0).value
        parts = integrate(f, 0.0, split).value + integrate(f, split, 1.0).value
        assert abs(whole - parts) < 10 * 1e-10


class TestGauss2F1:
    def test_binomial_identity(self):
        assert abs(gauss_2f1(0.5, 1.0, 1.0, -1.0) - 2.0 ** -0.5) < 1e-13

    def test_log_identity(self):
        assert abs(gauss_2f1(1.0, 1.0, 2.0, -1.0) - math.log(2.0)) < 1e-12

    def test_rational_series_oracle(self):
        oracle = rational_series_oracle()
        assert abs(oracle - F21_ORACLE) < 1e-15
        assert abs(gauss_2f1(0.3, 0.7, 1.4, -2.5) - F21_ORACLE) < 1e-13

    def test_unit_at_zero(self):
        for a, b, c in [(0.3, 0.9, 1.7), (2.0, 5.0, 0.5), (-1.5, 0.2, 3.0)]:
            assert gauss_2f1(a, b, c, 0.0) == 1.0

    def test_symmetry_in_a_b(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            a, b = rng.uniform(0.1, 2.0, 2)
            c = rng.uniform(0.2, 3.0)
            z = -rng.uniform(0.0, 5.0)
            assert abs(gauss_2f1(a, b, c, z) - gauss_2f1(b, a, c, z)) < 1e-12

    def test_positive_bounded_monotone(self):
        # positivity requires c >= min(a,b); see the decisions ledger
        rng = np.random.default_rng(11)
        for _ in range(30):
            a = rng.uniform(0.2, 1.5)
            b = rng.uniform(0.2, 1.5)
            c = max(a, b) + rng.uniform(0.05, 1.0)
            zs = -np.linspace(0.0, 6.0, 25)
            vals = [gauss_2f1(a, b, c, z) for z in zs]
            assert all(0 < v <= 1.0 + 1e-15 for v in vals)
            assert all(v1 - v0 <= 1e-12 for v0, v1 in zip(vals, vals[1:]))

    def test_invalid_c_rejected(self):
        with pytest.raises(NumericsDomainError):
            gauss_2f1(0.5, 1.0, 0.0, -1.0)
        with pytest.raises(NumericsDomainError):
            gauss_2f1(0.5, 1.0, -2.0, -1.0)

    def test_positive_z_rejected(self):
        with pytest.raises(NumericsDomainError):
            gauss_2f1(0.5, 1.0, 1.0, 0.5)


class TestBracketRoot:
    def test_linear(self):
        assert abs(bracket_root(lambda x: x - 0.5, 0.0, 1.0, 1e-12) - 0.5) < 1e-12

    def test_cosine(self):
        assert abs(bracket_root(math.cos, 0.0, 3.0, 1e-12) - math.pi / 2) < 1e-10

    def test_no_sign_change_rejected(self):
        with pytest.raises(NumericsDomainError):
            bracket_root(lambda x: x * x + 1.0, -1.0, 1.0, 1e-9)

    def test_ellipse_quadrant_rate_extremum(self):
        # frozen from a 1e5-sample scan of d(kappa)/ds on the a=2, b=1 quadrant
        from faircurves.nurbs import arc_nurbs

        oracle_t = 0.26593581812637596
        quadrant = arc_nurbs(1.0, 0.0, math.pi / 2).transformed(matrix=np.diag([2.0, 1.0]))

        def rate_slope(t, h=1e-6):
            return (quadrant.curvature_rate(t + h) - quadrant.curvature_rate(t - h)) / (2 * h)

        root = bracket_root(rate_slope, 0.1, 0.6, 1e-10)
        assert abs(root - oracle_t) < 1e-4
