import math

import numpy as np
import pytest

from faircurves.analytic import (
    HermiteTable,
    Superspiral,
    SuperspiralParams,
    sample_hermite,
)
from faircurves.nurbs import segment_count
from faircurves.quality import curvature_extrema, deviation
from faircurves.templates import (
    ConstructionError,
    bspline_from_hermite,
    nurbzs_from_hermite,
)

from conftest import random_monotone_triples


def circle_table(radius=1.0, sweep=math.pi / 3, nodes=2):
    """G2 Hermite data read exactly off a circle centred at the origin."""
    angles = np.linspace(0.0, sweep, nodes)
    pts = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    tangents = np.column_stack([-np.sin(angles), np.cos(angles)])
    normals = -np.column_stack([np.cos(angles), np.sin(angles)])
    kappas = np.full(nodes, 1.0 / radius)
    seg = np.full(nodes - 1, radius * sweep / (nodes - 1))
    return HermiteTable(pts, tangents, kappas, normals, seg)


def line_table(nodes=5, length=4.0):
    xs = np.linspace(0.0, length, nodes)
    pts = np.column_stack([xs, np.zeros(nodes)])
    der = np.tile([1.0, 0.0], (nodes, 1))
    return HermiteTable(pts, der, np.zeros(nodes), np.zeros((nodes, 2)), np.diff(xs))


class TestNurbzs:
    def test_circle_data_exact_arc(self):
        tab = circle_table(radius=1.0, sweep=math.pi / 3)
        curve = nurbzs_from_hermite(tab)
        ts = np.linspace(*curve.domain, 101)
        pts = curve.point(ts)
        assert np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0).max() < 1e-9

    def test_straight_segment_degenerates_to_line(self):
        curve = nurbzs_from_hermite(line_table(3))
        assert np.abs(curve.control_points[:, 1]).max() == 0.0
        assert np.allclose(curve.weights, 1.0)

    def test_clothoid_segment_deviation(self, clothoid):
        tab = sample_hermite(clothoid, np.array([1.0, 1.35]))
        curve = nurbzs_from_hermite(tab)
        dmax, dmin = deviation(curve, Superspiral(SuperspiralParams(0.5, 1, 1), (0.9, 1.5)), n=80)
        assert max(abs(dmax), abs(dmin)) < 1e-3 * tab.seg_lengths[0]

    def test_reproduces_hermite_data(self, paper_table):
        curve = nurbzs_from_hermite(paper_table)
        s = paper_table.cumulative_lengths()
        signed = paper_table.signed_curvatures()
        for i in (0, len(paper_table) - 1):
            p = curve.point(s[i])
            assert np.abs(p - paper_table.points[i]).max() < 1e-9
            d = curve.derivative(s[i], 1)
            t_ref = paper_table.derivatives[i] / np.linalg.norm(paper_table.derivatives[i])
            assert abs(d[0] * t_ref[1] - d[1] * t_ref[0]) / np.linalg.norm(d) < 1e-9
            assert abs(curve.curvature(s[i]) - signed[i]) < 1e-9 * max(1.0, abs(signed[i]))

    def test_interior_joints_are_g2(self, paper_table):
        curve = nurbzs_from_hermite(paper_table)
        s = paper_table.cumulative_lengths()
        lo, hi = curve.domain
        for u in s[1:-1]:
            k_left = curve.curvature(np.nextafter(u, lo))
            k_right = curve.curvature(np.nextafter(u, hi))
            assert abs(k_left - k_right) < 1e-6 * max(1.0, abs(k_right))

    def test_antiparallel_zero_curvature_rejected(self):
        tab = HermiteTable(
            points=[[0, 0], [1, 0]],
            derivatives=[[1, 0], [-1, 0]],
            curvatures=[0, 0],
            normals=[[0, 0], [0, 0]],
            seg_lengths=[1.0],
        )
        with pytest.raises(ConstructionError):
            nurbzs_from_hermite(tab)


class TestBsplineFromHermite:
    def test_line_data_exact(self):
        curve = bspline_from_hermite(line_table(6), 6)
        ts = np.linspace(*curve.domain, 40)
        assert np.abs(curve.point(ts)[:, 1]).max() == 0.0
        assert np.abs(curve.curvature(ts)).max() < 1e-14

    def test_circle_data_8_nodes_degree6(self):
        tab = circle_table(radius=1.0, sweep=math.pi / 2, nodes=8)
        curve = bspline_from_hermite(tab, 6)
        ts = np.linspace(*curve.domain, 301)
        pts = curve.point(ts)
        assert np.abs(np.hypot(pts[:, 0], pts[:, 1]) - 1.0).max() < 1e-6
        assert np.abs(curve.curvature(ts) - 1.0).max() < 0.01

    def test_paper_template_deviation(self, clothoid, paper_table):
        from faircurves.nurbs import extract_segments

        curve = bspline_from_hermite(paper_table, 8)
        assert segment_count(curve) == 15
        clipped = extract_segments(curve, 0, 12)
        dmax, dmin = deviation(clipped, clothoid, n=200)
        # the paper's construction reports max 0.00140453 / min -0.00417795;
        # ours targets the same magnitude budget
        assert abs(dmax) < 5e-3
        assert abs(dmin) < 5e-3

    def test_monotone_curvature_preserved(self, paper_table):
        curve = bspline_from_hermite(paper_table, 8)
        assert curvature_extrema(curve) == []

    def test_degree_validation(self, paper_table):
        with pytest.raises(ConstructionError):
            bspline_from_hermite(paper_table, 7)

    def test_node_count_validation(self):
        with pytest.raises(ConstructionError):
            bspline_from_hermite(circle_table(nodes=4), 6)

    def test_smoothness_degree_minus_one(self, paper_table):
        from faircurves.quality import smoothness_order

        curve = bspline_from_hermite(paper_table, 8)
        assert smoothness_order(curve) == 5  # capped report of C^(m-1)


class TestIsogeometricPreservation:
    def test_no_new_extrema_for_monotone_tables(self):
        rng = np.random.default_rng(17)
        for a, b, c in random_monotone_triples(rng, 3):
            ss = Superspiral(SuperspiralParams(a, b, c), domain=(0.0, 1.8))
            tab = sample_hermite(ss, np.linspace(0.0, 1.6, 20))
            assert np.all(np.diff(tab.curvatures) > 0)
            assert curvature_extrema(nurbzs_from_hermite(tab)) == []
            assert curvature_extrema(bspline_from_hermite(tab, 6)) == []
