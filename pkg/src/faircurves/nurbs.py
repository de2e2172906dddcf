"""Rational B-spline curves: representation, evaluation, knot operations.

A :class:`NurbsCurve` is immutable by convention; every operation returns a
new curve.  Closed curves are stored in unclamped periodic form: the last
``degree`` control points repeat the first ones and the knot vector extends
one period beyond each end of the domain, which makes the seam C^(degree-1)
whenever the interior knots are simple.

Evaluation runs through scipy's B-spline basis on homogeneous coordinates
(w*x, w*y, w); derivatives of the rational map come from the quotient rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.interpolate import BSpline

from .numerics import DEFAULT_TOLERANCE, ToleranceConfig, integrate

__all__ = [
    "NurbsCurve",
    "CurvatureSample",
    "GeometryError",
    "evaluate",
    "derivatives",
    "curvature_profile",
    "extract_segments",
    "set_topology",
    "insert_knot",
    "segment_count",
    "clamped_knots",
    "periodic_knot_window",
    "periodic_curve",
    "line_curve",
    "circle_nurbs",
    "arc_nurbs",
]

_BINOM = [[1], [1, 1], [1, 2, 1], [1, 3, 3, 1], [1, 4, 6, 4, 1], [1, 5, 10, 10, 5, 1]]
_MAX_DERIVATIVE = 5


class GeometryError(ValueError):
    """Invalid geometric input or out-of-domain parameter."""


def _derivative_spline(spl: BSpline) -> BSpline:
    """Derivative B-spline for any degree and knot multiplicity.

    Zero-width coefficient supports (repeated knots) get coefficient 0; their
    basis functions vanish identically, so the representation stays exact and
    evaluation at a repeated knot returns the right-sided limit.
    """
    t, c, k = spl.t, spl.c, spl.k
    if k == 0:
        raise GeometryError("cannot differentiate a degree-0 spline")
    n = len(c)
    dt = t[k + 1:n + k] - t[1:n]
    scale = np.where(dt > 0, k / np.where(dt == 0, 1.0, dt), 0.0)
    diff = c[1:] - c[:-1]
    new_c = diff * scale.reshape(-1, *([1] * (c.ndim - 1)))
    return BSpline.construct_fast(t[1:-1], np.ascontiguousarray(new_c), k - 1)


class NurbsCurve:
    """Planar rational B-spline of arbitrary degree.

    Parameters live in ``[knots[degree], knots[len(control_points)]]``.
    Evaluating outside that range is a hard error; callers that want clamping
    must do it themselves.
    """

    def __init__(self, degree: int, knots, control_points, weights=None, closed: bool = False):
        self.degree = int(degree)
        self.knots = np.asarray(knots, dtype=float)
        self.control_points = np.asarray(control_points, dtype=float)
        if weights is None:
            weights = np.ones(len(self.control_points))
        self.weights = np.asarray(weights, dtype=float)
        self.closed = bool(closed)
        self._basis_cache: dict[int, BSpline] = {}
        self._validate()

    def _validate(self):
        p, n = self.degree, len(self.control_points)
        if p < 1:
            raise GeometryError("degree must be >= 1")
        if self.control_points.ndim != 2 or self.control_points.shape[1] != 2:
            raise GeometryError("control_points must have shape (n, 2)")
        if len(self.knots) != n + p + 1:
            raise GeometryError(
                f"knot count {len(self.knots)} != control count {n} + degree {p} + 1"
            )
        if np.any(np.diff(self.knots) < 0):
            raise GeometryError("knot vector must be non-decreasing")
        if len(self.weights) != n or np.any(self.weights <= 0):
            raise GeometryError("weights must be positive, one per control point")
        lo, hi = self.domain
        if not hi > lo:
            raise GeometryError("curve domain is empty")
        interior = self.knots[(self.knots > lo) & (self.knots < hi)]
        if interior.size:
            _, counts = np.unique(interior, return_counts=True)
            if np.any(counts > p):
                raise GeometryError("interior knot multiplicity must be <= degree")

    # -- basic accessors ---------------------------------------------------

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.knots[self.degree]), float(self.knots[len(self.control_points)])

    def breakpoints(self) -> np.ndarray:
        """Distinct knot values inside the domain, endpoints included."""
        lo, hi = self.domain
        vals = np.unique(self.knots)
        return vals[(vals >= lo - 0.0) & (vals <= hi)]

    def bbox_diagonal(self) -> float:
        span = self.control_points.max(axis=0) - self.control_points.min(axis=0)
        return float(np.hypot(span[0], span[1]))

    def _basis(self, order: int) -> BSpline:
        """Homogeneous curve (w*x, w*y, w), differentiated ``order`` times.

        Derivative coefficients are built directly (not via scipy's FITPACK
        path) so any degree and any admissible knot multiplicity work; values
        at interior knots are the right-sided limits.
        """
        spl = self._basis_cache.get(order)
        if spl is None:
            if order == 0:
                coeffs = np.column_stack(
                    [self.control_points * self.weights[:, None], self.weights]
                )
                spl = BSpline.construct_fast(self.knots, coeffs, self.degree)
            else:
                spl = _derivative_spline(self._basis(order - 1))
            self._basis_cache[order] = spl
        return spl

    def _check_domain(self, t: np.ndarray):
        lo, hi = self.domain
        eps = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(t < lo - eps) or np.any(t > hi + eps):
            bad = t[(t < lo - eps) | (t > hi + eps)]
            raise GeometryError(f"parameter {bad.ravel()[0]!r} outside domain [{lo}, {hi}]")

    def _homogeneous(self, t: np.ndarray, order: int) -> np.ndarray:
        if order > self.degree:
            return np.zeros((np.size(t), 3))
        lo, hi = self.domain
        tt = np.clip(t, lo, hi)  # only absorbs representation-level rounding
        return np.atleast_2d(self._basis(order)(tt))

    # -- evaluation --------------------------------------------------------

    def point(self, t):
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_domain(t_arr)
        h = self._homogeneous(t_arr, 0)
        pts = h[:, :2] / h[:, 2:3]
        return pts[0] if np.ndim(t) == 0 else pts

    def derivative(self, t, order: int = 1):
        ders = self.derivatives_up_to(t, order)
        return ders[order]

    def derivatives_up_to(self, t, order: int) -> list[np.ndarray]:
        """Rational derivatives of order 0..order via the quotient rule."""
        if not 0 <= order <= _MAX_DERIVATIVE:
            raise GeometryError(f"derivative order must be between 0 and {_MAX_DERIVATIVE}")
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        self._check_domain(t_arr)
        hom = [self._homogeneous(t_arr, k) for k in range(order + 1)]
        w0 = hom[0][:, 2:3]
        out = [hom[0][:, :2] / w0]
        for k in range(1, order + 1):
            acc = hom[k][:, :2].copy()
            for j in range(k):
                acc -= _BINOM[k][j] * out[j] * hom[k - j][:, 2:3]
            out.append(acc / w0)
        if np.ndim(t) == 0:
            return [o[0] for o in out]
        return out

    def curvature(self, t):
        d = self.derivatives_up_to(t, 2)
        d1, d2 = np.atleast_2d(d[1]), np.atleast_2d(d[2])
        speed = np.hypot(d1[:, 0], d1[:, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            k = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
        return float(k[0]) if np.ndim(t) == 0 else k

    def curvature_rate(self, t):
        """d(kappa)/ds, the arc-length rate of curvature change."""
        d = self.derivatives_up_to(t, 3)
        d1, d2, d3 = (np.atleast_2d(d[i]) for i in (1, 2, 3))
        v2 = d1[:, 0] ** 2 + d1[:, 1] ** 2
        cross12 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        cross13 = d1[:, 0] * d3[:, 1] - d1[:, 1] * d3[:, 0]
        dot12 = d1[:, 0] * d2[:, 0] + d1[:, 1] * d2[:, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            rate = cross13 / v2**2 - 3.0 * cross12 * dot12 / v2**3
        return float(rate[0]) if np.ndim(t) == 0 else rate

    def speed(self, t):
        d1 = np.atleast_2d(self.derivative(t, 1))
        s = np.hypot(d1[:, 0], d1[:, 1])
        return float(s[0]) if np.ndim(t) == 0 else s

    def arc_length(self, t0: float, t1: float, cfg: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
        if t1 < t0:
            return -self.arc_length(t1, t0, cfg)
        # split at breakpoints so derivative kinks never straddle a panel
        bps = [b for b in self.breakpoints() if t0 < b < t1]
        total = 0.0
        left = t0
        for b in list(bps) + [t1]:
            total += integrate(lambda u: self.speed(u), left, b, cfg).value
            left = b
        return total

    # -- transforms ---------------------------------------------------------

    def transformed(self, matrix=None, translation=(0.0, 0.0)) -> "NurbsCurve":
        cps = self.control_points
        if matrix is not None:
            cps = cps @ np.asarray(matrix, dtype=float).T
        cps = cps + np.asarray(translation, dtype=float)
        return NurbsCurve(self.degree, self.knots.copy(), cps, self.weights.copy(), self.closed)

    def scaled(self, factor: float) -> "NurbsCurve":
        return self.transformed(matrix=np.eye(2) * float(factor))

    def __repr__(self):
        return (
            f"NurbsCurve(degree={self.degree}, n_cp={len(self.control_points)}, "
            f"closed={self.closed})"
        )


# -- constructors -----------------------------------------------------------


def clamped_knots(degree: int, breakpoints: Sequence[float]) -> np.ndarray:
    b = np.asarray(breakpoints, dtype=float)
    return np.concatenate([np.full(degree, b[0]), b, np.full(degree, b[-1])])


def periodic_knot_window(degree: int, period_block: np.ndarray, period: float) -> np.ndarray:
    """Knot vector window for a periodic spline space.

    ``period_block`` lists one period of the (bi-infinite) knot sequence,
    multiplicities included; the window wraps ``degree`` knots before and
    ``degree + 1`` after so that the domain covers exactly one period.
    """
    b = np.asarray(period_block, dtype=float)
    p = int(degree)
    if len(b) <= p:
        raise GeometryError("periodic space needs more knots per period than the degree")
    return np.concatenate([b[-p:] - period, b, b[:p + 1] + period])


def _periodic_from_block(degree: int, block, period: float, cps, weights=None) -> NurbsCurve:
    """Closed curve from a one-period knot block and control points in
    periodic basis order (basis i starts at block knot i)."""
    p = int(degree)
    cps = np.asarray(cps, dtype=float)
    n = len(cps)
    if n != len(block):
        raise GeometryError("need one control point per periodic basis function")
    knots = periodic_knot_window(p, block, period)
    if weights is None:
        weights = np.ones(n)
    w = np.asarray(weights, dtype=float)
    # basis j of the knot window is the periodic image of basis (j - p) mod n
    rolled_cps = np.roll(cps, p, axis=0)
    rolled_w = np.roll(w, p)
    cps_full = np.vstack([rolled_cps, rolled_cps[:p]])
    w_full = np.concatenate([rolled_w, rolled_w[:p]])
    return NurbsCurve(p, knots, cps_full, w_full, closed=True)


def periodic_curve(degree: int, breakpoints, unique_cps, unique_weights=None) -> NurbsCurve:
    """Closed curve from one period of simple breakpoints and control points.

    ``breakpoints`` spans one period (last value = first + period); the wrap
    copies of the first ``degree`` control points are materialised so the
    stored form satisfies the usual count invariants.
    """
    b = np.asarray(breakpoints, dtype=float)
    period = b[-1] - b[0]
    if period <= 0:
        raise GeometryError("breakpoints must span a positive period")
    cps = np.asarray(unique_cps, dtype=float)
    if len(cps) != len(b) - 1:
        raise GeometryError("need exactly one control point per periodic span")
    return _periodic_from_block(degree, b[:-1], period, cps, unique_weights)


def line_curve(p0, p1, degree: int = 1) -> NurbsCurve:
    """Exact straight segment of the requested degree, linearly parametrized."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    if length == 0:
        raise GeometryError("line endpoints coincide")
    knots = clamped_knots(degree, [0.0, length])
    # control points at Greville abscissae keep |C'| == 1
    greville = np.array([knots[i + 1:i + degree + 1].mean() for i in range(degree + 1)])
    cps = p0 + (greville / length)[:, None] * (p1 - p0)
    return NurbsCurve(degree, knots, cps)


def arc_nurbs(radius: float, angle0: float, angle1: float, center=(0.0, 0.0)) -> NurbsCurve:
    """Exact circular arc as a clamped rational quadratic (one or more pieces)."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    sweep = angle1 - angle0
    if not 0 < abs(sweep) < 2 * math.pi + 1e-12:
        raise GeometryError("arc sweep must be in (0, 2*pi]")
    n_seg = max(1, int(math.ceil(abs(sweep) / (0.5 * math.pi) - 1e-12)))
    delta = sweep / n_seg
    w_mid = math.cos(0.5 * delta)
    center = np.asarray(center, dtype=float)
    cps = []
    weights = []
    for i in range(n_seg):
        th = angle0 + i * delta
        cps.append([math.cos(th), math.sin(th)])
        weights.append(1.0)
        mid = th + 0.5 * delta
        cps.append([math.cos(mid) / w_mid, math.sin(mid) / w_mid])
        weights.append(w_mid)
    cps.append([math.cos(angle1), math.sin(angle1)])
    weights.append(1.0)
    cps = center + radius * np.asarray(cps)
    interior = np.repeat(np.linspace(0.0, abs(sweep), n_seg + 1)[1:-1], 2)
    knots = np.concatenate([[0.0] * 3, interior, [abs(sweep)] * 3])
    return NurbsCurve(2, knots, cps, weights)


def circle_nurbs(radius: float = 1.0, center=(0.0, 0.0)) -> NurbsCurve:
    """Full circle as a closed (periodic) rational quadratic, CCW."""
    if radius <= 0:
        raise GeometryError("radius must be positive")
    w = math.sqrt(2.0) / 2.0
    pts = np.array(
        [[1, 0], [1, 1], [0, 1], [-1, 1], [-1, 0], [-1, -1], [0, -1], [1, -1]], dtype=float
    )
    weights = np.array([1, w, 1, w, 1, w, 1, w])
    quarter = 0.5 * math.pi * radius  # parametrize roughly by arc length
    cps = np.asarray(center, dtype=float) + radius * pts
    # periodic storage; the circle's natural layout has double knots per joint.
    # Greville alignment: the basis starting at block knot i owns point i+1.
    period = 4 * quarter
    block = np.repeat(np.arange(4) * quarter, 2)
    return _periodic_from_block(
        2, block, period, np.roll(cps, -1, axis=0), np.roll(weights, -1)
    )


# -- module-level operation surface ------------------------------------------


def evaluate(curve: NurbsCurve, t):
    """Point on the curve; hard error for parameters outside the knot range."""
    return curve.point(t)


def derivatives(curve: NurbsCurve, t, order: int = 1):
    """Derivatives 1..order (order <= 3) at ``t`` as a list of vectors."""
    if not 1 <= order <= 3:
        raise GeometryError("order must be 1, 2 or 3")
    return curve.derivatives_up_to(t, order)[1:]


@dataclass(frozen=True)
class CurvatureSample:
    """One station of a curvature profile; ``singular`` marks |C'| ~ 0."""

    t: float
    s: float
    point: tuple[float, float]
    kappa: float
    singular: bool = False


def curvature_profile(
    curve: NurbsCurve,
    n: int,
    comb_scale: float | None = None,
    cfg: ToleranceConfig = DEFAULT_TOLERANCE,
) -> tuple[list[CurvatureSample], np.ndarray]:
    """``n`` curvature samples uniform in parameter plus comb tip points.

    Arc length accumulates by adaptive quadrature between consecutive
    samples.  Comb tips are ``point + comb_scale * kappa * left_normal``; the
    default scale fits the largest tooth to 10% of the bounding-box diagonal.
    """
    if n < 2:
        raise GeometryError("n must be >= 2")
    lo, hi = curve.domain
    ts = np.linspace(lo, hi, n)
    ders = curve.derivatives_up_to(ts, 2)
    pts, d1, d2 = ders[0], ders[1], ders[2]
    speed = np.hypot(d1[:, 0], d1[:, 1])
    tiny = 1e-12 * max(curve.bbox_diagonal(), 1.0)
    singular = speed < tiny
    with np.errstate(divide="ignore", invalid="ignore"):
        kappa = (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]) / speed**3
    kappa = np.where(singular, np.nan, kappa)

    s_acc = np.zeros(n)
    for i in range(1, n):
        s_acc[i] = s_acc[i - 1] + integrate(lambda u: curve.speed(u), ts[i - 1], ts[i], cfg).value

    finite = np.abs(kappa[~singular])
    k_max = finite.max() if finite.size else 0.0
    if comb_scale is None:
        comb_scale = 0.1 * curve.bbox_diagonal() / k_max if k_max > 0 else 1.0
    normals = np.zeros((n, 2))
    ok = ~singular
    normals[ok, 0] = -d1[ok, 1] / speed[ok]
    normals[ok, 1] = d1[ok, 0] / speed[ok]
    tips = pts + comb_scale * np.where(singular, 0.0, np.nan_to_num(kappa))[:, None] * normals

    samples = [
        CurvatureSample(float(ts[i]), float(s_acc[i]), (float(pts[i, 0]), float(pts[i, 1])),
                        float(kappa[i]) if not singular[i] else float("nan"), bool(singular[i]))
        for i in range(n)
    ]
    return samples, tips


# -- knot machinery -----------------------------------------------------------


def insert_knot(curve: NurbsCurve, u: float, times: int = 1) -> NurbsCurve:
    """Boehm insertion of ``u`` (``times`` repetitions) in homogeneous space."""
    lo, hi = curve.domain
    if not lo <= u <= hi:
        raise GeometryError(f"knot {u!r} outside domain [{lo}, {hi}]")
    p = curve.degree
    knots = curve.knots.copy()
    hcp = np.column_stack([curve.control_points * curve.weights[:, None], curve.weights])
    for _ in range(times):
        k = int(np.searchsorted(knots, u, side="right") - 1)
        k = min(max(k, p), len(hcp) - 1)
        new_hcp = np.empty((len(hcp) + 1, 3))
        new_hcp[: k - p + 1] = hcp[: k - p + 1]
        for i in range(k - p + 1, k + 1):
            denom = knots[i + p] - knots[i]
            alpha = 0.0 if denom == 0 else (u - knots[i]) / denom
            new_hcp[i] = (1.0 - alpha) * hcp[i - 1] + alpha * hcp[i]
        new_hcp[k + 1:] = hcp[k:]
        knots = np.insert(knots, k + 1, u)
        hcp = new_hcp
    w = hcp[:, 2]
    cps = hcp[:, :2] / w[:, None]
    return NurbsCurve(p, knots, cps, w, curve.closed)


def _multiplicity(knots: np.ndarray, u: float) -> int:
    return int(np.sum(np.abs(knots - u) < 1e-14 * max(1.0, abs(u))))


def _clamp_section(curve: NurbsCurve, u_lo: float, u_hi: float) -> NurbsCurve:
    """Sub-curve on [u_lo, u_hi] as a clamped curve; exact via knot insertion."""
    p = curve.degree
    work = curve
    for u in (u_lo, u_hi):
        m = _multiplicity(work.knots, u)
        if m < p:
            work = insert_knot(work, u, p - m)
    knots = work.knots
    hcp = np.column_stack([work.control_points * work.weights[:, None], work.weights])
    i_lo = int(np.searchsorted(knots, u_lo, side="left"))
    # the on-curve control point at u_lo sits just before its knot block
    first = max(i_lo - 1, 0)
    interior = knots[(knots > u_lo) & (knots < u_hi)]
    new_knots = np.concatenate([[u_lo] * (p + 1), interior, [u_hi] * (p + 1)])
    n_cp = len(new_knots) - p - 1
    section = hcp[first:first + n_cp]
    w = section[:, 2]
    return NurbsCurve(p, new_knots, section[:, :2] / w[:, None], w, closed=False)


def segment_count(curve: NurbsCurve) -> int:
    """Number of non-empty knot spans inside the domain."""
    return len(curve.breakpoints()) - 1


def extract_segments(curve: NurbsCurve, start: int, count: int) -> NurbsCurve:
    """Sub-curve covering knot spans [start, start + count)."""
    if curve.closed:
        curve = set_topology(curve, "open")
    total = segment_count(curve)
    if start < 0 or count < 1 or start + count > total:
        raise GeometryError(
            f"segment range [{start}, {start + count}) outside [0, {total})"
        )
    bps = curve.breakpoints()
    return _clamp_section(curve, float(bps[start]), float(bps[start + count]))


def set_topology(curve: NurbsCurve, to: str, snap_tol: float | None = None) -> NurbsCurve:
    """Convert between clamped (open) and periodic (closed) representation.

    Opening inserts a full-multiplicity knot at the seam, which never changes
    evaluations.  Closing refits the curve in the periodic spline space over
    the same breakpoints (uniform weights only) and requires the endpoints to
    coincide within ``snap_tol``.
    """
    if to not in ("open", "closed"):
        raise GeometryError("topology must be 'open' or 'closed'")
    if (to == "closed") == curve.closed:
        return curve
    if to == "open":
        lo, hi = curve.domain
        return _clamp_section(curve, lo, hi)

    # closing
    lo, hi = curve.domain
    gap = float(np.linalg.norm(curve.point(lo) - curve.point(hi)))
    if snap_tol is None:
        snap_tol = 1e-6 * max(curve.bbox_diagonal(), 1.0)
    if gap > snap_tol:
        raise GeometryError(
            f"endpoint gap {gap:.6g} exceeds snap tolerance {snap_tol:.6g}; cannot close"
        )
    if not np.allclose(curve.weights, curve.weights[0]):
        raise GeometryError("closing is only supported for uniform-weight curves")
    p = curve.degree
    bps = curve.breakpoints()
    n = len(bps) - 1
    if n < p + 1:
        raise GeometryError("too few spans to close at this degree")
    # least-squares fit in the periodic space over the same breakpoints
    m = max(20 * n, 160)
    ts = np.linspace(lo, hi, m, endpoint=False)
    target = curve.point(ts)
    design = np.zeros((m, n))
    unit = np.zeros((n, 2))
    for j in range(n):
        unit[:] = 0.0
        unit[j, 0] = 1.0
        basis = periodic_curve(p, bps, unit.copy())
        design[:, j] = basis._basis(0)(ts)[:, 0]
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return periodic_curve(p, bps, coef)
