"""Curve fairness scoring and approximation-deviation certification.

All operations work on any planar-curve object exposing ``domain``,
``point(t)``, ``derivative(t, order)``, ``curvature(t)``,
``curvature_rate(t)`` and ``arc_length(t0, t1)`` -- NURBS curves and the
analytic curves alike.

Conventions: curvature is signed (positive turns left); deviation is signed
along the reference tangent frame, positive on the right-normal side (outside
a counter-clockwise reference); curvature extrema with relative prominence
below ``NOISE_FLOOR`` are suppressed as floating-point ripple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .numerics import (
    DEFAULT_TOLERANCE,
    NumericsDomainError,
    ToleranceConfig,
    bracket_root,
    integrate,
)

__all__ = [
    "QualityReport",
    "ProjectionError",
    "NOISE_FLOOR",
    "SMOOTHNESS_CAP",
    "smoothness_order",
    "curvature_extrema",
    "curvature_variation",
    "bending_energy",
    "deviation",
    "lcg_linearity",
    "make_report",
]

NOISE_FLOOR = 1e-6       # relative prominence below which extrema are ripple
SMOOTHNESS_CAP = 5       # highest derivative order checked / reported
_SCAN_SAMPLES = 2048


class ProjectionError(ArithmeticError):
    """Closest-point projection failed at a specific sample."""


@dataclass(frozen=True)
class QualityReport:
    """Fairness criteria values for one curve (optionally versus a reference)."""

    smoothness_order: int
    extrema: tuple[tuple[float, float], ...]   # (arc length, curvature)
    variation: float
    max_rate: float
    bending_energy: float
    deviation_max: float
    deviation_min: float
    monotone: bool
    lcg_residual: float

    def __post_init__(self):
        if self.variation < 0 or self.bending_energy < 0:
            raise ValueError("variation and bending energy must be non-negative")
        if self.monotone != (len(self.extrema) == 0):
            raise ValueError("monotone flag must mirror an empty extrema list")


def _rate_samples(curve, ts: np.ndarray) -> np.ndarray:
    try:
        out = np.asarray(curve.curvature_rate(ts), dtype=float)
        if out.shape == ts.shape:
            return out
    except (TypeError, ValueError):
        pass
    return np.array([curve.curvature_rate(float(t)) for t in ts])


def _kappa_samples(curve, ts: np.ndarray) -> np.ndarray:
    out = np.asarray(curve.curvature(ts), dtype=float)
    if out.shape == ts.shape:
        return out
    return np.array([curve.curvature(float(t)) for t in ts])


def _speed(curve, t: float) -> float:
    d = curve.derivative(t, 1)
    return float(np.hypot(d[0], d[1]))


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(15)


class _ArcLengthMap:
    """Cumulative arc length with cheap inversion.

    Cell boundaries follow the curve's breakpoints (subdivided to at least 16
    cells); per-cell lengths come from adaptive quadrature once, after which
    station lookups cost one fixed Gauss panel plus a couple of Newton steps.
    """

    def __init__(self, curve, cfg: ToleranceConfig = DEFAULT_TOLERANCE):
        self.curve = curve
        lo, hi = curve.domain
        breakpoints = getattr(curve, "breakpoints", None)
        if breakpoints is not None:
            cells = np.asarray(breakpoints() if callable(breakpoints) else breakpoints, dtype=float)
        else:
            cells = np.array([lo, hi])
        while len(cells) - 1 < 16:
            mids = 0.5 * (cells[:-1] + cells[1:])
            cells = np.sort(np.concatenate([cells, mids]))
        self.cells = cells
        lengths = [
            integrate(lambda u: _speed(curve, u), float(a), float(b), cfg).value
            for a, b in zip(cells[:-1], cells[1:])
        ]
        self.cum = np.concatenate([[0.0], np.cumsum(lengths)])

    @property
    def total(self) -> float:
        return float(self.cum[-1])

    def _partial(self, a: float, b: float) -> float:
        if b <= a:
            return 0.0
        half, mid = 0.5 * (b - a), 0.5 * (a + b)
        ts = mid + half * _GL_NODES
        return half * float(np.sum(_GL_WEIGHTS * [_speed(self.curve, t) for t in ts]))

    def s_of(self, t: float) -> float:
        i = int(np.clip(np.searchsorted(self.cells, t, side="right") - 1, 0, len(self.cells) - 2))
        return float(self.cum[i]) + self._partial(float(self.cells[i]), float(t))

    def t_of(self, s: float) -> float:
        """Parameter at arc length ``s``; Newton with bisection safeguarding."""
        s = min(max(s, 0.0), self.total)
        i = int(np.clip(np.searchsorted(self.cum, s, side="right") - 1, 0, len(self.cells) - 2))
        a, b = float(self.cells[i]), float(self.cells[i + 1])
        t = a + (b - a) * 0.5
        lo_t, hi_t = a, b
        for _ in range(60):
            err = self.cum[i] + self._partial(a, t) - s
            if abs(err) <= 1e-13 * max(self.total, 1.0):
                return t
            if err > 0:
                hi_t = t
            else:
                lo_t = t
            v = _speed(self.curve, t)
            step = err / v if v > 0 else 0.0
            t_new = t - step
            if not lo_t < t_new < hi_t:
                t_new = 0.5 * (lo_t + hi_t)
            t = t_new
        return t


def smoothness_order(curve) -> int:
    """Minimum over interior knots of the matched one-sided derivative order.

    Orders 1..5 are compared as left/right limits with a 1e-6 relative
    agreement criterion; spans with no interior knots (or exact agreement
    throughout) report the cap of 5.
    """
    breakpoints = getattr(curve, "breakpoints", None)
    if breakpoints is None:
        return SMOOTHNESS_CAP
    bps = breakpoints() if callable(breakpoints) else np.asarray(breakpoints)
    interior = bps[1:-1]
    if interior.size == 0:
        return SMOOTHNESS_CAP

    lo, hi = curve.domain
    probes = np.linspace(lo, hi, 33)
    ders = curve.derivatives_up_to(probes, SMOOTHNESS_CAP)
    char = [np.linalg.norm(d, axis=1).max() for d in ders]

    worst = SMOOTHNESS_CAP
    for u in interior:
        left = curve.derivatives_up_to(np.nextafter(u, lo), SMOOTHNESS_CAP)
        right = curve.derivatives_up_to(np.nextafter(u, hi), SMOOTHNESS_CAP)
        order = 0
        for k in range(1, SMOOTHNESS_CAP + 1):
            dl, dr = np.asarray(left[k]), np.asarray(right[k])
            gap = np.linalg.norm(dl - dr)
            scale = max(np.linalg.norm(dl), np.linalg.norm(dr), char[k])
            if gap <= 1e-6 * scale or (gap == 0.0 and scale == 0.0):
                order = k
            else:
                break
        worst = min(worst, order)
        if worst == 0:
            break
    return worst


def _refined_extrema(curve, flat_tol: float) -> tuple[list[tuple[float, float]], np.ndarray, np.ndarray]:
    """Interior parameter/curvature extrema candidates from a dense rate scan."""
    lo, hi = curve.domain
    ts = np.linspace(lo, hi, _SCAN_SAMPLES)
    kappa = _kappa_samples(curve, ts)
    finite = np.isfinite(kappa)
    if not np.all(finite):
        ts, kappa = ts[finite], kappa[finite]
    k_scale = np.abs(kappa).max() if len(kappa) else 0.0
    if len(kappa) == 0 or kappa.max() - kappa.min() <= flat_tol * max(k_scale, 1e-300):
        return [], ts, kappa  # constant curvature

    rate = _rate_samples(curve, ts)
    found: list[tuple[float, float]] = []
    for i in range(len(ts) - 1):
        r0, r1 = rate[i], rate[i + 1]
        if not (np.isfinite(r0) and np.isfinite(r1)):
            continue
        if r0 * r1 < 0:
            t_ext = bracket_root(
                lambda u: float(_rate_samples(curve, np.array([u]))[0]),
                float(ts[i]), float(ts[i + 1]),
                tol=1e-10 * (hi - lo),
            )
            if lo < t_ext < hi:
                found.append((t_ext, float(_kappa_samples(curve, np.array([t_ext]))[0])))

    # closed curves: an extremum can sit at the seam, invisible to the scan
    if getattr(curve, "closed", False) and len(rate) >= 2:
        r_last, r_first = rate[-2], rate[1]
        if np.isfinite(r_last) and np.isfinite(r_first) and r_last * r_first < 0:
            near = [t for t, _ in found if t - lo < 2 * (ts[1] - ts[0]) or hi - t < 2 * (ts[1] - ts[0])]
            if not near:
                found.append((lo, float(kappa[0])))
    return found, ts, kappa


def _prune_extrema(
    candidates: list[tuple[float, float]],
    k_start: float,
    k_end: float,
    threshold: float,
    cyclic: bool = False,
) -> list[tuple[float, float]]:
    """Drop extrema whose curvature prominence falls below the noise floor.

    Prominence is the smaller curvature swing toward the two neighbouring
    extrema (the curve endpoints act as sentinels on open curves; closed
    curves wrap around).
    """
    items = sorted(candidates)
    while items:
        ks = [k for _, k in items]
        if cyclic:
            proms = [
                min(abs(ks[i] - ks[i - 1]), abs(ks[i] - ks[(i + 1) % len(ks)]))
                for i in range(len(ks))
            ] if len(ks) > 1 else [math.inf]
        else:
            seq = [k_start] + ks + [k_end]
            swings = [abs(seq[i + 1] - seq[i]) for i in range(len(seq) - 1)]
            proms = [min(swings[i], swings[i + 1]) for i in range(len(items))]
        worst = int(np.argmin(proms))
        if proms[worst] >= threshold:
            break
        del items[worst]
    return items


def curvature_extrema(curve, cfg: ToleranceConfig = DEFAULT_TOLERANCE) -> list[tuple[float, float]]:
    """Interior curvature extrema as (arc length from start, curvature) pairs.

    A 2048-sample scan of d(kappa)/ds locates sign changes, each refined by
    root bracketing; extrema whose prominence falls below ``NOISE_FLOOR``
    relative to the largest curvature magnitude are suppressed, and the
    endpoints are never reported.
    """
    candidates, ts, kappa = _refined_extrema(curve, NOISE_FLOOR)
    if not candidates:
        return []
    k_scale = np.abs(kappa).max()
    kept = _prune_extrema(
        candidates, kappa[0], kappa[-1], NOISE_FLOOR * max(k_scale, 1e-300),
        cyclic=bool(getattr(curve, "closed", False)),
    )
    lo, _ = curve.domain
    out = []
    prev_t, s_acc = lo, 0.0
    for t_ext, k_ext in kept:
        s_acc += curve.arc_length(prev_t, t_ext)
        prev_t = t_ext
        out.append((float(s_acc), float(k_ext)))
    return out


def curvature_variation(curve, cfg: ToleranceConfig = DEFAULT_TOLERANCE) -> tuple[float, float]:
    """Total curvature variation (integral of |d kappa/ds| ds) and max |d kappa/ds|.

    The integral is taken by adaptive quadrature on the monotone pieces
    between curvature extrema; near-constant-curvature curves short-circuit
    to the sampled curvature range.
    """
    lo, hi = curve.domain
    candidates, ts, kappa = _refined_extrema(curve, NOISE_FLOOR)
    rate = np.abs(_rate_samples(curve, ts))
    max_rate = float(rate[np.isfinite(rate)].max()) if len(rate) else 0.0
    k_scale = np.abs(kappa).max() if len(kappa) else 0.0
    if not candidates:
        if len(kappa) and kappa.max() - kappa.min() <= NOISE_FLOOR * max(k_scale, 1e-300):
            return float(kappa.max() - kappa.min()), max_rate

    def integrand(t: float) -> float:
        return abs(float(_rate_samples(curve, np.array([t]))[0])) * _speed(curve, t)

    cuts = [lo] + [t for t, _ in sorted(candidates)] + [hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            total += integrate(integrand, a, b, cfg).value
    return float(total), max_rate


def bending_energy(curve, cfg: ToleranceConfig = DEFAULT_TOLERANCE) -> float:
    """Elastic bending energy: integral of kappa^2 ds over the whole curve."""
    lo, hi = curve.domain

    def integrand(t: float) -> float:
        k = float(_kappa_samples(curve, np.array([t]))[0])
        return k * k * _speed(curve, t)

    breakpoints = getattr(curve, "breakpoints", None)
    if breakpoints is not None:
        cuts = list(breakpoints() if callable(breakpoints) else breakpoints)
    else:
        cuts = [lo, hi]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        if b > a:
            total += integrate(integrand, float(a), float(b), cfg).value
    return float(total)


def _closest_parameter(reference, q: np.ndarray, scan_ts: np.ndarray, scan_pts: np.ndarray) -> float:
    d2 = (scan_pts[:, 0] - q[0]) ** 2 + (scan_pts[:, 1] - q[1]) ** 2
    i = int(np.argmin(d2))
    lo = scan_ts[max(i - 1, 0)]
    hi = scan_ts[min(i + 1, len(scan_ts) - 1)]

    def g(t: float) -> float:
        p = reference.point(t)
        d = reference.derivative(t, 1)
        return float((p[0] - q[0]) * d[0] + (p[1] - q[1]) * d[1])

    g_lo, g_hi = g(lo), g(hi)
    if g_lo == 0.0:
        return float(lo)
    if g_hi == 0.0:
        return float(hi)
    if g_lo * g_hi < 0:
        return bracket_root(g, float(lo), float(hi), tol=1e-12 * (scan_ts[-1] - scan_ts[0]))
    # distance minimum at the scan boundary (curve endpoint)
    if i == 0 or i == len(scan_ts) - 1:
        return float(scan_ts[i])
    raise ProjectionError(
        f"no closest-point bracket near parameter {scan_ts[i]!r} for sample {q.tolist()}"
    )


def deviation(subject, reference, n: int = 400) -> tuple[float, float]:
    """Signed deviation extremes (max, min) of ``subject`` from ``reference``.

    Each of ``n`` subject samples is projected to its closest reference point
    (coarse scan refined by root bracketing); the signed distance is the
    component along the reference right normal, so points outside a
    counter-clockwise reference measure positive.
    """
    lo, hi = subject.domain
    ts = np.linspace(lo, hi, n)
    rl, rh = reference.domain
    scan_ts = np.linspace(rl, rh, max(8 * n, 512))
    scan_pts = np.asarray(reference.point(scan_ts), dtype=float)
    if scan_pts.ndim == 1:
        scan_pts = scan_pts.reshape(-1, 2)

    worst_max, worst_min = -math.inf, math.inf
    for t in ts:
        q = np.asarray(subject.point(float(t)), dtype=float)
        t_ref = _closest_parameter(reference, q, scan_ts, scan_pts)
        p = np.asarray(reference.point(t_ref), dtype=float)
        d = np.asarray(reference.derivative(t_ref, 1), dtype=float)
        tangent = d / np.linalg.norm(d)
        v = q - p
        signed = float(v[0] * tangent[1] - v[1] * tangent[0])
        worst_max = max(worst_max, signed)
        worst_min = min(worst_min, signed)
    return worst_max, worst_min


def lcg_linearity(curve, n: int = 64) -> float:
    """Max residual of a line fit to the logarithmic curvature graph.

    Samples ``n`` stations uniform in arc length (measured from the curve
    start, excluding the start itself so the logarithm exists) and fits
    log kappa against log s by least squares; near-zero residual identifies
    log-aesthetic segments.
    """
    if n < 3:
        raise ValueError("need at least 3 stations")
    lo, hi = curve.domain
    arc = _ArcLengthMap(curve)
    total = arc.total
    stations = np.arange(1, n + 1) * total / n
    ts = np.array([arc.t_of(s) for s in stations[:-1]] + [hi])
    kappa = _kappa_samples(curve, ts)
    if np.any(kappa <= 0):
        raise NumericsDomainError("logarithmic curvature graph needs kappa > 0 throughout")
    x = np.log(stations)
    y = np.log(kappa)
    coeffs = np.polyfit(x, y, 1)
    resid = y - np.polyval(coeffs, x)
    return float(np.abs(resid).max())


def make_report(curve, reference=None, cfg: ToleranceConfig = DEFAULT_TOLERANCE) -> QualityReport:
    """Full fairness report; deviation fields are NaN without a reference."""
    extrema = curvature_extrema(curve, cfg)
    variation, max_rate = curvature_variation(curve, cfg)
    energy = bending_energy(curve, cfg)
    dev_max, dev_min = (math.nan, math.nan)
    if reference is not None:
        dev_max, dev_min = deviation(curve, reference)
    try:
        lcg = lcg_linearity(curve)
    except (NumericsDomainError, ValueError):
        lcg = math.nan
    return QualityReport(
        smoothness_order=smoothness_order(curve),
        extrema=tuple((float(s), float(k)) for s, k in extrema),
        variation=variation,
        max_rate=max_rate,
        bending_energy=energy,
        deviation_max=dev_max,
        deviation_min=dev_min,
        monotone=len(extrema) == 0,
        lcg_residual=lcg,
    )
