import math

import numpy as np
import pytest

from faircurves.nurbs import (
    GeometryError,
    NurbsCurve,
    arc_nurbs,
    circle_nurbs,
    clamped_knots,
    curvature_profile,
    derivatives,
    evaluate,
    extract_segments,
    insert_knot,
    line_curve,
    periodic_curve,
    segment_count,
    set_topology,
)


def quarter_circle():
    """Rational quadratic quarter circle, weights (1, sqrt(2)/2, 1)."""
    w = math.sqrt(2) / 2
    return NurbsCurve(
        2,
        clamped_knots(2, [0.0, 1.0]),
        [[1, 0], [1, 1], [0, 1]],
        [1.0, w, 1.0],
    )


class TestEvaluate:
    def test_clamped_start_is_first_control_point(self):
        c = quarter_circle()
        assert np.allclose(evaluate(c, 0.0), [1, 0])

    def test_quarter_circle_midpoint_on_circle(self):
        c = quarter_circle()
        p = evaluate(c, 0.5)
        assert abs(np.hypot(p[0], p[1]) - 1.0) < 1e-12

    def test_degree_one_midpoint(self):
        c = NurbsCurve(1, [0, 0, 1, 1], [[0, 0], [2, 2]])
        assert np.allclose(evaluate(c, 0.5), [1, 1])

    def test_out_of_range_is_hard_error(self):
        with pytest.raises(GeometryError):
            evaluate(quarter_circle(), 1.5)
        with pytest.raises(GeometryError):
            derivatives(quarter_circle(), -0.2, 1)

    def test_derivative_orders(self):
        c = quarter_circle()
        d1, d2, d3 = derivatives(c, 0.3, 3)
        h = 1e-5
        fd1 = (c.point(0.3 + h) - c.point(0.3 - h)) / (2 * h)
        assert np.allclose(d1, fd1, atol=1e-6)
        fd2 = (c.point(0.3 + h) - 2 * c.point(0.3) + c.point(0.3 - h)) / h**2
        assert np.allclose(d2, fd2, atol=1e-4)
        fd3 = (
            c.point(0.3 + 2 * h) - 2 * c.point(0.3 + h)
            + 2 * c.point(0.3 - h) - c.point(0.3 - 2 * h)
        ) / (2 * h**3)
        assert np.allclose(d3, fd3, atol=2e-1 * max(1.0, np.abs(fd3).max()))

    def test_affine_invariance(self):
        rng = np.random.default_rng(5)
        c = quarter_circle()
        ts = np.linspace(0, 1, 17)
        for _ in range(5):
            m = rng.normal(size=(2, 2))
            b = rng.normal(size=2)
            mapped = c.transformed(matrix=m, translation=b)
            direct = c.point(ts) @ m.T + b
            assert np.abs(mapped.point(ts) - direct).max() < 1e-12


class TestCurvatureProfile:
    def test_unit_circle(self):
        samples, tips = curvature_profile(circle_nurbs(), 64)
        assert all(abs(s.kappa - 1.0) < 1e-9 for s in samples)
        ss = [s.s for s in samples]
        assert all(b > a for a, b in zip(ss, ss[1:]))
        assert abs(ss[-1] - 2 * math.pi) < 1e-9
        assert tips.shape == (64, 2)

    def test_line(self):
        samples, _ = curvature_profile(line_curve([0, 0], [2, 1], degree=3), 16)
        assert all(abs(s.kappa) < 1e-12 for s in samples)

    def test_clothoid_template_linear_kappa(self, paper_table):
        from faircurves.templates import bspline_from_hermite

        curve = bspline_from_hermite(paper_table, 8)
        samples, _ = curvature_profile(curve, 200)
        s = np.array([q.s for q in samples])
        k = np.array([q.kappa for q in samples])
        fit = np.polyfit(s, k, 1)
        resid = np.abs(k - np.polyval(fit, s)).max()
        assert resid < 1e-3


class TestKnotOperations:
    def test_insertion_preserves_curve(self):
        c = arc_nurbs(1.5, 0.1, 1.4)
        ts = np.linspace(*c.domain, 40)
        before = c.point(ts)
        c2 = insert_knot(c, 0.37 * c.domain[1], 2)
        assert np.abs(c2.point(ts) - before).max() < 1e-12

    def test_extract_full_range_identity(self):
        c = arc_nurbs(1.0, 0.0, 2.0)
        ts = np.linspace(*c.domain, 100)
        sub = extract_segments(c, 0, segment_count(c))
        assert np.abs(sub.point(ts) - c.point(ts)).max() < 1e-12

    def test_paper_clipping_arithmetic(self, paper_table):
        from faircurves.templates import bspline_from_hermite

        curve = bspline_from_hermite(paper_table, 8)
        assert segment_count(curve) == 15  # 16 points -> 15 segments
        clipped = extract_segments(curve, 0, 12)
        assert segment_count(clipped) == 12
        ts = np.linspace(*clipped.domain, 60)
        assert np.abs(clipped.point(ts) - curve.point(ts)).max() < 1e-12

    def test_single_segment_equals_bezier_piece(self, paper_table):
        from faircurves.templates import nurbzs_from_hermite

        curve = nurbzs_from_hermite(paper_table)
        piece = extract_segments(curve, 3, 1)
        ts = np.linspace(*piece.domain, 25)
        assert np.abs(piece.point(ts) - curve.point(ts)).max() < 1e-12

    def test_extract_composition(self):
        # extracting [2,5) of [0,10) equals extracting [2,5) directly
        breges = np.linspace(0.0, 10.0, 11)
        rng = np.random.default_rng(2)
        cps = rng.normal(size=(13, 2)).cumsum(axis=0)
        c = NurbsCurve(3, clamped_knots(3, breges), cps)
        outer = extract_segments(c, 0, 10)
        once = extract_segments(c, 2, 3)
        twice = extract_segments(outer, 2, 3)
        ts = np.linspace(2.0, 5.0, 40)
        assert np.abs(once.point(ts) - twice.point(ts)).max() < 1e-12

    def test_out_of_range_rejected(self):
        c = arc_nurbs(1.0, 0.0, 2.0)
        with pytest.raises(GeometryError):
            extract_segments(c, 0, segment_count(c) + 1)
        with pytest.raises(GeometryError):
            extract_segments(c, -1, 1)


class TestTopology:
    def test_open_circle_preserves_evaluations(self):
        c = circle_nurbs()
        ts = np.linspace(*c.domain, 100)
        opened = set_topology(c, "open")
        assert not opened.closed
        assert np.abs(opened.point(ts) - c.point(ts)).max() < 1e-12

    def test_close_octagon_vcurve_seam_continuity(self, octagon_vertices):
        from faircurves.fairing import Polyline, vcurve_from_support

        ring = np.vstack([octagon_vertices, octagon_vertices[:1]])
        open_poly = Polyline(ring, kind="support", topology="open")
        faired = vcurve_from_support(open_poly)
        closed = set_topology(faired.curve, "closed", snap_tol=1e-3)
        assert closed.closed
        lo, hi = closed.domain
        k_left = closed.curvature(np.nextafter(hi, lo))
        k_right = closed.curvature(lo)
        assert abs(k_left - k_right) < 1e-6

    def test_large_gap_rejected_with_distance(self):
        c = line_curve([0.0, 0.0], [0.5, 0.0], degree=3)
        with pytest.raises(GeometryError) as err:
            set_topology(c, "closed", snap_tol=1e-6)
        assert "0.5" in str(err.value)


class TestPeriodic:
    def test_seam_smoothness(self):
        verts = np.array(
            [[math.cos(k * math.pi / 3), math.sin(k * math.pi / 3)] for k in range(6)]
        )
        c = periodic_curve(4, np.arange(7.0), verts)
        lo, hi = c.domain
        for order in (1, 2, 3):
            dl = c.derivative(np.nextafter(hi, lo), order)
            dr = c.derivative(lo, order)
            assert np.allclose(dl, dr, atol=1e-9)

    def test_count_invariant(self):
        c = circle_nurbs()
        assert len(c.control_points) == len(c.knots) - c.degree - 1
        assert np.all(c.weights > 0)
