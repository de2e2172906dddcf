"""NURBS templates from Hermite data.

Two constructors turn a :class:`~faircurves.analytic.HermiteTable` into
spline form:

- :func:`nurbzs_from_hermite`: a rational Bezier spline (piecewise rational
  cubic, full-multiplicity interior knots) matching position, tangent
  direction and signed curvature at every node.  Circular-arc data reproduces
  the arc exactly; otherwise the two per-segment leg lengths are closed by
  matching the segment midpoint predicted from a linear-curvature model.

- :func:`bspline_from_hermite`: a polynomial B-spline of high even degree
  with simple interior knots (so C^(degree-1)), interpolating node positions
  exactly and tangent directions exactly when the space can carry them; any
  remaining freedom minimizes curvature-rate variation as in fairing.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import least_squares

from ._spline_fit import SplineSpace, solve_fair_curve
from .analytic import HermiteTable
from .nurbs import NurbsCurve, line_curve

__all__ = [
    "ConstructionError",
    "SUPPORTED_BSPLINE_DEGREES",
    "nurbzs_from_hermite",
    "bspline_from_hermite",
]

SUPPORTED_BSPLINE_DEGREES = (6, 8, 10)


class ConstructionError(ValueError):
    """Hermite data incompatible with the requested construction."""


def _cross(a, b) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def _unit(v: np.ndarray) -> np.ndarray:
    n = np.linalg.norm(v)
    if n == 0:
        raise ConstructionError("zero derivative vector in Hermite data")
    return v / n


def _rational_cubic_end_curvatures(b: np.ndarray, w: np.ndarray) -> tuple[float, float]:
    l0 = np.linalg.norm(b[1] - b[0])
    l1 = np.linalg.norm(b[3] - b[2])
    k0 = (2.0 / 3.0) * (w[0] * w[2] / w[1] ** 2) * _cross(b[1] - b[0], b[2] - b[0]) / l0**3
    k1 = (2.0 / 3.0) * (w[3] * w[1] / w[2] ** 2) * _cross(b[1] - b[3], b[2] - b[3]) / l1**3
    return k0, k1


def _rational_cubic_point(b: np.ndarray, w: np.ndarray, t: float) -> np.ndarray:
    s = 1.0 - t
    basis = np.array([s**3, 3 * s * s * t, 3 * s * t * t, t**3]) * w
    return (basis[:, None] * b).sum(axis=0) / basis.sum()


def _linear_curvature_midpoint(p0, t0, p1, t1, k0, k1, length) -> np.ndarray:
    """Midpoint estimate from the linear-in-arc-length curvature model.

    Integrates the model forward from each endpoint's frame and averages, so
    inconsistencies between the model and the actual end data cancel to first
    order.
    """
    x, wgl = np.polynomial.legendre.leggauss(16)

    def model_pos(u_lo: float, u_hi: float) -> np.ndarray:
        half, mid = 0.5 * (u_hi - u_lo), 0.5 * (u_hi + u_lo)
        u = mid + half * x
        theta = k0 * u + (k1 - k0) * u * u / (2.0 * length)
        return half * np.array([np.sum(wgl * np.cos(theta)), np.sum(wgl * np.sin(theta))])

    def rot(angle: float) -> np.ndarray:
        c, s = math.cos(angle), math.sin(angle)
        return np.array([[c, -s], [s, c]])

    phi0 = math.atan2(t0[1], t0[0])
    phi1 = math.atan2(t1[1], t1[0])
    theta_l = k0 * length + 0.5 * (k1 - k0) * length
    forward = p0 + rot(phi0) @ model_pos(0.0, 0.5 * length)
    backward = p1 - rot(phi1 - theta_l) @ model_pos(0.5 * length, length)
    return 0.5 * (forward + backward)


def _segment_rational_cubic(p0, t0, k0, p1, t1, k1, length, index) -> tuple[np.ndarray, np.ndarray]:
    """Control points and weights of one G2 rational cubic segment."""
    chord_vec = p1 - p0
    chord = float(np.linalg.norm(chord_vec))
    if chord == 0:
        raise ConstructionError(f"segment {index}: coincident endpoints")
    kscale = max(abs(k0), abs(k1))

    # straight data
    if kscale * chord < 1e-12:
        if float(t0 @ t1) < 0:
            raise ConstructionError(
                f"segment {index}: antiparallel tangents with zero curvature"
            )
        if abs(_cross(t0, chord_vec)) > 1e-9 * chord or abs(_cross(t1, chord_vec)) > 1e-9 * chord:
            raise ConstructionError(
                f"segment {index}: zero curvature but tangents leave the chord"
            )
        b = np.array([p0, p0 + chord_vec / 3.0, p0 + 2.0 * chord_vec / 3.0, p1])
        return b, np.ones(4)

    # circular-arc data: equal curvatures and a shared center
    left0 = np.array([-t0[1], t0[0]])
    left1 = np.array([-t1[1], t1[0]])
    if abs(k0 - k1) <= 1e-9 * kscale and k0 != 0.0:
        radius = 1.0 / k0
        c0 = p0 + radius * left0
        c1 = p1 + radius * left1
        if np.linalg.norm(c0 - c1) <= 1e-7 * abs(radius):
            sweep = math.atan2(_cross(t0, t1), float(t0 @ t1))
            denom = _cross(t0, t1)
            if abs(sweep) > 1e-6 and abs(denom) > 1e-12:
                a = _cross(chord_vec, t1) / denom
                q1 = p0 + a * t0  # tangent-line intersection
                wq = math.cos(0.5 * sweep)
                # degree-elevate the rational quadratic arc to cubic
                h = np.array(
                    [[*p0, 1.0], [*(wq * q1), wq], [*p1, 1.0]]
                )
                hb = np.array([h[0], (h[0] + 2 * h[1]) / 3.0, (2 * h[1] + h[2]) / 3.0, h[2]])
                w = hb[:, 2]
                return hb[:, :2] / w[:, None], w

    # general data: legs solved to match the model midpoint
    target_mid = _linear_curvature_midpoint(p0, t0, p1, t1, k0, k1, length)

    def build(l0: float, l1: float):
        b1 = p0 + l0 * t0
        b2 = p1 - l1 * t1
        q0 = _cross(t0, b2 - p0) / l0**2
        q1 = _cross(b1 - p1, b2 - p1) / l1**3
        bad = None
        if k0 == 0.0:
            # zero end curvature forces b2 onto the start tangent line
            bad = abs(q0)
            u = None
        if k0 != 0.0:
            u = 1.5 * k0 / q0 if q0 * k0 > 0 else None
        v = 1.5 * k1 / q1 if (k1 != 0.0 and q1 * k1 > 0) else None
        return b1, b2, u, v, bad

    def weights_from(u: float, v: float) -> tuple[float, float]:
        return (u * u * v) ** (-1.0 / 3.0), (u * v * v) ** (-1.0 / 3.0)

    def residual(ls: np.ndarray) -> np.ndarray:
        l0, l1 = ls
        b1 = p0 + l0 * t0
        b2 = p1 - l1 * t1
        if k0 != 0.0 and k1 != 0.0:
            q0 = _cross(t0, b2 - p0) / l0**2
            q1 = _cross(b1 - p1, b2 - p1) / l1**3
            u = 1.5 * k0 / q0 if q0 * k0 > 0 else -1.0
            v = 1.5 * k1 / q1 if q1 * k1 > 0 else -1.0
            if u <= 0 or v <= 0:
                return np.array([10.0 * chord, 10.0 * chord])
            w1, w2 = weights_from(u, v)
        elif k0 == 0.0 and k1 != 0.0:
            # collinearity b0, b1, b2 handled by pinning l1 below
            q1 = _cross(b1 - p1, b2 - p1) / l1**3
            if q1 * k1 <= 0:
                return np.array([10.0 * chord, 10.0 * chord])
            w = 2.0 * q1 / (3.0 * k1)
            if w <= 0:
                return np.array([10.0 * chord, 10.0 * chord])
            w1 = w2 = w
        elif k1 == 0.0 and k0 != 0.0:
            q0 = _cross(t0, b2 - p0) / l0**2
            if q0 * k0 <= 0:
                return np.array([10.0 * chord, 10.0 * chord])
            w = 2.0 * q0 / (3.0 * k0)
            if w <= 0:
                return np.array([10.0 * chord, 10.0 * chord])
            w1 = w2 = w
        else:
            w1 = w2 = 1.0
        b = np.array([p0, b1, b2, p1])
        wv = np.array([1.0, w1, w2, 1.0])
        return _rational_cubic_point(b, wv, 0.5) - target_mid

    cr = _cross(t0, t1)
    lower = np.array([0.02 * chord, 0.02 * chord])
    upper = np.array([2.5 * chord, 2.5 * chord])
    x0 = np.array([chord / 3.0, chord / 3.0])
    fixed = [None, None]
    if k0 == 0.0 and k1 != 0.0:
        if abs(cr) < 1e-12:
            raise ConstructionError(f"segment {index}: cannot satisfy zero start curvature")
        fixed[1] = _cross(t0, chord_vec) / cr
    if k1 == 0.0 and k0 != 0.0:
        if abs(cr) < 1e-12:
            raise ConstructionError(f"segment {index}: cannot satisfy zero end curvature")
        fixed[0] = _cross(t1, chord_vec) / cr

    if fixed[0] is not None or fixed[1] is not None:
        pin = 1 if fixed[1] is not None else 0
        pin_value = fixed[pin]
        if not 0 < pin_value < 4.0 * chord:
            raise ConstructionError(f"segment {index}: inconsistent zero-curvature end data")
        free = 1 - pin

        def residual1(ls: np.ndarray) -> np.ndarray:
            full = np.empty(2)
            full[pin] = pin_value
            full[free] = ls[0]
            return residual(full)

        sol = least_squares(
            residual1, np.array([chord / 3.0]),
            bounds=(lower[:1], upper[:1]), xtol=1e-14, ftol=1e-14, gtol=1e-14,
        )
        ls = np.empty(2)
        ls[pin] = pin_value
        ls[free] = sol.x[0]
    else:
        sol = least_squares(
            residual, x0, bounds=(lower, upper), xtol=1e-14, ftol=1e-14, gtol=1e-14
        )
        ls = sol.x

    l0, l1 = ls
    b1 = p0 + l0 * t0
    b2 = p1 - l1 * t1
    if k0 != 0.0 and k1 != 0.0:
        q0 = _cross(t0, b2 - p0) / l0**2
        q1 = _cross(b1 - p1, b2 - p1) / l1**3
        if q0 * k0 <= 0 or q1 * k1 <= 0:
            raise ConstructionError(f"segment {index}: curvature conditions unsatisfiable")
        w1, w2 = weights_from(1.5 * k0 / q0, 1.5 * k1 / q1)
    elif k0 == 0.0 and k1 != 0.0:
        q1 = _cross(b1 - p1, b2 - p1) / l1**3
        w1 = w2 = 2.0 * q1 / (3.0 * k1)
    elif k1 == 0.0 and k0 != 0.0:
        q0 = _cross(t0, b2 - p0) / l0**2
        w1 = w2 = 2.0 * q0 / (3.0 * k0)
    else:
        w1 = w2 = 1.0
    if w1 <= 0 or w2 <= 0:
        raise ConstructionError(f"segment {index}: negative interior weight")
    return np.array([p0, b1, b2, p1]), np.array([1.0, w1, w2, 1.0])


def nurbzs_from_hermite(table: HermiteTable) -> NurbsCurve:
    """Piecewise rational cubic matching G2 Hermite data at every node."""
    n = len(table)
    if n < 2:
        raise ConstructionError("need at least 2 Hermite nodes")
    tangents = np.array([_unit(d) for d in table.derivatives])
    signed = table.signed_curvatures()
    s = table.cumulative_lengths()

    all_b: list[np.ndarray] = []
    all_w: list[float] = []
    for i in range(n - 1):
        b, w = _segment_rational_cubic(
            table.points[i], tangents[i], signed[i],
            table.points[i + 1], tangents[i + 1], signed[i + 1],
            table.seg_lengths[i], i,
        )
        if i == 0:
            all_b.extend(b)
            all_w.extend(w)
        else:
            all_b.extend(b[1:])
            all_w.extend(w[1:])

    knots = np.concatenate([[s[0]], np.repeat(s, 3), [s[-1]]])
    return NurbsCurve(3, knots, np.asarray(all_b), np.asarray(all_w))


def _is_line_data(table: HermiteTable) -> bool:
    if np.any(table.curvatures != 0):
        return False
    chord = table.points[-1] - table.points[0]
    scale = np.linalg.norm(chord)
    if scale == 0:
        return False
    rel = table.points - table.points[0]
    if np.any(np.abs(rel[:, 0] * chord[1] - rel[:, 1] * chord[0]) > 1e-12 * scale * scale):
        return False
    t = table.derivatives
    return bool(np.all(np.abs(t[:, 0] * chord[1] - t[:, 1] * chord[0])
                       <= 1e-12 * scale * np.linalg.norm(t, axis=1)))


def bspline_from_hermite(table: HermiteTable, degree: int) -> NurbsCurve:
    """Polynomial B-spline of high even degree from Hermite data.

    Interior knots sit at the interior nodes (simple), giving C^(degree-1)
    smoothness and one knot span per table segment.  Node positions are
    interpolated exactly; tangent directions exactly when 2*(degree-1) >= n,
    otherwise in stiff least squares (the mandated knot layout runs out of
    freedoms).  Node curvatures must reproduce within 2% of the largest table
    curvature or the construction fails.
    """
    if degree not in SUPPORTED_BSPLINE_DEGREES:
        raise ConstructionError(
            f"degree must be one of {SUPPORTED_BSPLINE_DEGREES}, got {degree}"
        )
    n = len(table)
    if n < degree // 2 + 2:
        raise ConstructionError(f"need at least {degree // 2 + 2} nodes for degree {degree}")

    if _is_line_data(table):
        return line_curve(table.points[0], table.points[-1], degree=degree)

    s = table.cumulative_lengths()
    tangents = np.array([_unit(d) for d in table.derivatives])
    signed_k = table.signed_curvatures()
    space = SplineSpace(degree, s, closed=False)
    free_after_positions = 2 * (degree - 1)
    mode = "hard" if n <= free_after_positions else "soft"
    result = solve_fair_curve(
        space,
        s,
        table.points,
        dir_ts=s,
        dir_vecs=tangents,
        dir_mode=mode,
        kappa_ts=s,
        kappa_targets=signed_k,
        functional="variation",
    )
    curve = space.curve(result.coeffs)

    kscale = np.abs(signed_k).max()
    if kscale > 0:
        achieved = np.array([curve.curvature(t) for t in s])
        rel = np.abs(achieved - signed_k) / kscale
        if rel.max() > 0.02:
            raise ConstructionError(
                f"node curvature residual {rel.max():.3%} exceeds the 2% budget"
            )
    return curve
