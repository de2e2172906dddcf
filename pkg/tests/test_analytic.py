import math

import numpy as np
import pytest

from faircurves.analytic import (
    AnalyticCurveSpec,
    IntrinsicCurve,
    LacParams,
    SampleSchedule,
    Superspiral,
    SuperspiralParams,
    build_schedule,
    integrate_intrinsic,
    lac_curvature,
    sample_hermite,
    superspiral_arclength,
    superspiral_point,
    superspiral_radius,
)
from faircurves.numerics import NumericsDomainError

from conftest import CLOTHOID, random_monotone_triples

# frozen from a 1e6-panel Simpson oracle of rho*cos / rho*sin on [0, 1]
CLOTHOID_POINT_1 = (0.7078205460173594, 0.36036479062826193)
# frozen from a 20k-panel Simpson oracle of the (0.3, 0.7, 1.4) radius on [0, 2]
ARCLEN_ORACLE = 1.8013887020666217
# frozen from the alternating power series of the Fresnel-type integrals at s=1
FRESNEL_POINT_1 = (0.9752876882003446, 0.16371404737570058)


class TestSuperspiralRadius:
    def test_unit_at_zero(self):
        assert superspiral_radius(SuperspiralParams(0.5, 1.0, 1.0), 0.0) == 1.0

    def test_clothoid_binomial(self):
        # the paper's clothoid case: rho = (1 + theta)^(-1/2)
        assert abs(superspiral_radius(CLOTHOID, 3.0) - 0.5) < 1e-13

    def test_log_case(self):
        assert abs(superspiral_radius(SuperspiralParams(1, 1, 2), 1.0) - math.log(2)) < 1e-12

    def test_negative_theta_rejected(self):
        with pytest.raises(NumericsDomainError):
            superspiral_radius(CLOTHOID, -0.5)


class TestSuperspiralPoint:
    def test_origin(self):
        assert np.allclose(superspiral_point(CLOTHOID, 0.0), [0.0, 0.0])

    def test_degenerate_circle(self):
        # a = 0 makes rho constant 1: the unit circle through the origin
        p = superspiral_point(SuperspiralParams(0.0, 1.0, 1.0), math.pi / 2)
        assert np.allclose(p, [1.0, 1.0], atol=1e-12)

    def test_clothoid_simpson_oracle(self):
        p = superspiral_point(CLOTHOID, 1.0)
        assert abs(p[0] - CLOTHOID_POINT_1[0]) < 1e-9
        assert abs(p[1] - CLOTHOID_POINT_1[1]) < 1e-9


class TestSuperspiralArclength:
    def test_zero(self):
        assert superspiral_arclength(CLOTHOID, 0.0) == 0.0

    def test_clothoid_closed_form(self):
        assert abs(superspiral_arclength(CLOTHOID, 3.0) - 2.0) < 1e-10

    def test_simpson_oracle(self):
        s = superspiral_arclength(SuperspiralParams(0.3, 0.7, 1.4), 2.0)
        assert abs(s - ARCLEN_ORACLE) < 1e-9


class TestLacCurvature:
    def test_clothoid_slope(self):
        p = LacParams(alpha=-1.0, c0=0.0, c1=1.0)
        for s in (0.5, 1.0, 2.5):
            assert abs(lac_curvature(p, s) - s) < 1e-15

    def test_circle(self):
        p = LacParams(alpha=1.0, c0=4.0, c1=0.0)
        assert abs(lac_curvature(p, 3.0) - 0.25) < 1e-15

    def test_direct_substitution(self):
        p = LacParams(alpha=2.0, c0=1.0, c1=0.5)
        assert abs(lac_curvature(p, 2.0) - 2.0 ** -0.5) < 1e-14

    def test_exponential_degenerate(self):
        p = LacParams(alpha=0.0, c0=2.0, c1=0.3)
        assert abs(lac_curvature(p, 1.0) - 2.0 * math.exp(-0.3)) < 1e-14

    def test_nonpositive_base_rejected(self):
        with pytest.raises(NumericsDomainError):
            lac_curvature(LacParams(alpha=2.0, c0=1.0, c1=-1.0), 2.0)


class TestIntegrateIntrinsic:
    def test_straight_line(self):
        curve = integrate_intrinsic(lambda s: 0.0, (0.0, 5.0), theta0=math.pi / 6, origin=(1, 2))
        p = curve(3.0)
        expect = np.array([1, 2]) + 3.0 * np.array([math.cos(math.pi / 6), math.sin(math.pi / 6)])
        assert np.allclose(p, expect, atol=1e-12)

    def test_circle(self):
        R = 2.0
        curve = integrate_intrinsic(lambda s: 1.0 / R, (0.0, 2 * math.pi * R), theta0=0.0)
        # after a quarter of the circumference the point is (R, R)
        assert np.allclose(curve(0.5 * math.pi * R), [R, R], atol=1e-10)

    def test_fresnel_series_oracle(self):
        curve = integrate_intrinsic(lambda s: s, (0.0, 1.5))
        p = curve(1.0)
        assert abs(p[0] - FRESNEL_POINT_1[0]) < 1e-8
        assert abs(p[1] - FRESNEL_POINT_1[1]) < 1e-8


class TestBuildSchedule:
    def test_paper_schedule(self):
        ts = build_schedule(SampleSchedule(16, 0.0, 0.1, 1.0))
        inc = np.diff(ts)
        assert len(ts) == 16
        assert abs(inc[0] - 0.1) < 1e-12
        assert abs(inc[-1] - 1.0) < 1e-12
        ratios = inc[1:] / inc[:-1]
        assert np.allclose(ratios, ratios[0])

    def test_uniform(self):
        ts = build_schedule(SampleSchedule(5, 1.0, 0.25, 0.25))
        assert np.allclose(np.diff(ts), 0.25)

    def test_two_points(self):
        ts = build_schedule(SampleSchedule(2, 0.0, 0.5, 9.9))
        assert np.allclose(ts, [0.0, 0.5])


class TestSampleHermite:
    def test_circle_quadrant(self):
        circ = Superspiral(SuperspiralParams(0.0, 1, 1), domain=(0.0, math.pi / 2))
        tab = sample_hermite(circ, np.linspace(0, math.pi / 2, 5))
        assert np.allclose(tab.curvatures, 1.0, atol=1e-12)
        assert np.allclose(tab.seg_lengths, math.pi / 8, atol=1e-10)

    def test_clothoid_paper_schedule_monotone(self, paper_table):
        assert np.all(np.diff(paper_table.curvatures) > 0)

    def test_straight_line(self):
        line = integrate_intrinsic(lambda s: 0.0, (0.0, 1.0))
        tab = sample_hermite(line, np.linspace(0, 1, 3))
        assert np.allclose(tab.derivatives, tab.derivatives[0])
        assert np.all(tab.curvatures == 0.0)
        assert np.all(tab.normals == 0.0)

    def test_table_consistency(self, paper_table):
        # unit normals orthogonal to the derivative where curvature > 0
        norms = np.linalg.norm(paper_table.normals, axis=1)
        curved = paper_table.curvatures > 0
        assert np.all(np.abs(norms[curved] - 1.0) < 1e-12)
        dots = np.einsum("ij,ij->i", paper_table.normals, paper_table.derivatives)
        assert np.all(np.abs(dots) < 1e-10)

    def test_arclength_additivity(self, clothoid, paper_schedule, paper_table):
        total = clothoid.arc_length(paper_schedule[0], paper_schedule[-1])
        assert abs(paper_table.seg_lengths.sum() - total) < 1e-8


class TestInvariants:
    def test_clothoid_equivalence(self, clothoid):
        # kappa = (s + 2) / 2 exactly along the (0.5, 1, 1) superspiral
        ths = np.linspace(0.0, 3.0, 50)
        s = np.array([clothoid.arc_length(0.0, t) for t in ths])
        k = np.array([clothoid.curvature(t) for t in ths])
        fit = np.polyfit(s, k, 1)
        assert abs(fit[0] - 0.5) < 1e-8
        assert abs(fit[1] - 1.0) < 1e-8
        assert np.abs(k - np.polyval(fit, s)).max() < 1e-8

    def test_monotone_curvature_family(self):
        rng = np.random.default_rng(3)
        for a, b, c in random_monotone_triples(rng, 4):
            ss = Superspiral(SuperspiralParams(a, b, c), domain=(0.0, 2.0))
            ks = ss.curvature(np.linspace(0.0, 2.0, 40))
            assert np.all(np.diff(ks) > -1e-12)

    def test_intrinsic_matches_superspiral_clothoid(self, clothoid):
        # kappa(u) = u clothoid, scaled by sqrt(2), reproduces the superspiral:
        # the similarity maps arc u = (s + 2)/sqrt(2) with tangent offset -1 rad
        lam = math.sqrt(2.0)
        lac = integrate_intrinsic(lambda u: u, (0.0, 4.0), theta0=-1.0)
        shift = -lam * lac.point(lam)  # superspiral origin sits at u0 = sqrt(2)
        for theta in np.linspace(0.0, 3.0, 7):
            s = clothoid.arc_length(0.0, theta)
            u = (s + 2.0) / lam
            mapped = lam * lac.point(u) + shift
            assert np.allclose(mapped, clothoid.point(theta), atol=1e-6)

    def test_radius_guard_outside_family(self):
        bad = Superspiral(SuperspiralParams(1.386, 1.233, 0.267), domain=(0.0, 1.8))
        with pytest.raises(NumericsDomainError):
            bad.radius(1.6)


class TestAnalyticCurveSpec:
    def test_superspiral_realize(self):
        spec = AnalyticCurveSpec("superspiral", (0.0, 2.0), superspiral=CLOTHOID)
        curve = spec.realize()
        assert isinstance(curve, Superspiral)
        assert curve.domain == (0.0, 2.0)

    def test_lac_realize(self):
        spec = AnalyticCurveSpec("lac", (0.0, 2.0), lac=LacParams(-1, 0, 1))
        assert isinstance(spec.realize(), IntrinsicCurve)

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            AnalyticCurveSpec("parabola", (0.0, 1.0))
