"""Analytic aesthetic curves: superspirals, log-aesthetic curves, intrinsic-equation
reconstruction, and Hermite-table sampling.

A superspiral has radius of curvature ``rho(theta) = scale * 2F1(a, b; c; -theta)``
in the tangent-angle parametrization, so the clothoid is the special case
``(a, b, c) = (0.5, 1, 1)`` and a circle is ``a = 0``.  Log-aesthetic curves are
given by their arc-length curvature law and realised as point sets through
:func:`integrate_intrinsic`.

All curve objects expose the common planar-curve protocol used by
:mod:`faircurves.quality`: ``domain``, ``closed``, ``point(t)``,
``derivative(t, order)``, ``curvature(t)``, ``curvature_rate(t)`` and
``arc_length(t0, t1)``.
"""

from __future__ import annotations

import bisect
import math
import threading
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .numerics import (
    DEFAULT_TOLERANCE,
    NumericsDomainError,
    ToleranceConfig,
    gauss_2f1,
    integrate,
)

__all__ = [
    "SuperspiralParams",
    "LacParams",
    "SampleSchedule",
    "HermiteTable",
    "AnalyticCurveSpec",
    "Superspiral",
    "IntrinsicCurve",
    "superspiral_radius",
    "superspiral_point",
    "superspiral_arclength",
    "lac_curvature",
    "integrate_intrinsic",
    "build_schedule",
    "sample_hermite",
]


@dataclass(frozen=True)
class SuperspiralParams:
    """Shape parameters (a, b, c) and an overall length scale."""

    a: float
    b: float
    c: float
    scale: float = 1.0

    def __post_init__(self):
        if self.c <= 0 and self.c == int(self.c):
            raise NumericsDomainError(
                f"c must not be zero or a negative integer, got {self.c!r}",
                code="HYPERGEOMETRIC_DOMAIN",
            )
        if self.scale <= 0:
            raise ValueError("scale must be positive")


@dataclass(frozen=True)
class LacParams:
    """Log-aesthetic curvature law: slope alpha and the linear-law coefficients."""

    alpha: float
    c0: float
    c1: float


@dataclass(frozen=True)
class SampleSchedule:
    """Geometrically graded parameter schedule from h_first up to h_last."""

    n_points: int
    t0: float = 0.0
    h_first: float = 0.1
    h_last: float = 1.0

    def __post_init__(self):
        if self.n_points < 2:
            raise ValueError("n_points must be >= 2")
        if self.h_first <= 0 or self.h_last <= 0:
            raise ValueError("increments must be strictly positive")


@dataclass(frozen=True)
class HermiteTable:
    """Per-node point / first derivative / curvature data plus segment arc lengths.

    ``normals[i]`` is the unit vector from the node toward its center of
    curvature; it is the zero vector where ``curvatures[i] == 0`` (straight
    data has no curvature center).
    """

    points: np.ndarray       # (n, 2)
    derivatives: np.ndarray  # (n, 2)
    curvatures: np.ndarray   # (n,), magnitudes >= 0
    normals: np.ndarray      # (n, 2), zero rows where curvature == 0
    seg_lengths: np.ndarray  # (n - 1,), > 0

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ValueError("points must be an (n, 2) array with n >= 2")
        n = pts.shape[0]
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "derivatives", np.asarray(self.derivatives, dtype=float).reshape(n, 2))
        object.__setattr__(self, "curvatures", np.asarray(self.curvatures, dtype=float).reshape(n))
        object.__setattr__(self, "normals", np.asarray(self.normals, dtype=float).reshape(n, 2))
        object.__setattr__(self, "seg_lengths", np.asarray(self.seg_lengths, dtype=float).reshape(n - 1))
        if np.any(self.curvatures < 0):
            raise ValueError("curvature magnitudes must be non-negative")
        if np.any(self.seg_lengths <= 0):
            raise ValueError("segment lengths must be positive")
        norms = np.linalg.norm(self.normals, axis=1)
        curved = self.curvatures > 0
        if np.any(np.abs(norms[curved] - 1.0) > 1e-9):
            raise ValueError("unit curvature vectors must have norm 1 where curvature > 0")

    def __len__(self) -> int:
        return self.points.shape[0]

    def signed_curvatures(self) -> np.ndarray:
        """Curvatures signed by the orientation of (derivative, normal)."""
        cross = (self.derivatives[:, 0] * self.normals[:, 1]
                 - self.derivatives[:, 1] * self.normals[:, 0])
        sign = np.where(cross >= 0, 1.0, -1.0)
        return self.curvatures * sign

    def cumulative_lengths(self) -> np.ndarray:
        return np.concatenate([[0.0], np.cumsum(self.seg_lengths)])


@dataclass(frozen=True)
class AnalyticCurveSpec:
    """Serializable description of an analytic curve plus its parameter range."""

    family: str                  # superspiral | lac
    t_range: tuple[float, float]
    superspiral: SuperspiralParams | None = None
    lac: LacParams | None = None
    theta0: float = 0.0

    def __post_init__(self):
        if self.family == "superspiral":
            if self.superspiral is None:
                raise ValueError("superspiral spec needs SuperspiralParams")
        elif self.family == "lac":
            if self.lac is None:
                raise ValueError("lac spec needs LacParams")
        else:
            raise ValueError(f"unknown analytic family {self.family!r}")
        if not self.t_range[1] > self.t_range[0]:
            raise ValueError("t_range must be increasing")

    def realize(self, cfg: "ToleranceConfig" = None):
        """Instantiate the described curve object."""
        cfg = cfg or DEFAULT_TOLERANCE
        if self.family == "superspiral":
            return Superspiral(self.superspiral, domain=self.t_range, cfg=cfg)
        params = self.lac
        return IntrinsicCurve(
            lambda s: lac_curvature(params, s), self.t_range, theta0=self.theta0, cfg=cfg
        )


class _CachedAntiderivative:
    """Antiderivative of ``f`` from ``t0``, memoising previously reached anchors.

    Repeated evaluations only integrate over the gap from the nearest anchor,
    which keeps dense sampling of superspiral coordinates close to O(1) per
    point.  Anchor bookkeeping is locked so curve objects stay safe to share
    between threads.
    """

    def __init__(self, f: Callable[[float], float], t0: float, cfg: ToleranceConfig):
        self._f = f
        self._cfg = ToleranceConfig(
            abs_tol=min(cfg.abs_tol, 1e-12),
            rel_tol=min(cfg.rel_tol, 1e-12),
            max_subdivisions=cfg.max_subdivisions,
        )
        self._ts = [t0]
        self._vals = [0.0]
        self._lock = threading.Lock()

    def __call__(self, t: float) -> float:
        with self._lock:
            i = bisect.bisect_left(self._ts, t)
            if i < len(self._ts) and self._ts[i] == t:
                return self._vals[i]
            # nearest anchor at or below t, else the lowest anchor
            j = max(i - 1, 0)
            t_anchor, v_anchor = self._ts[j], self._vals[j]
        if t >= t_anchor:
            inc = integrate(self._f, t_anchor, t, self._cfg).value
        else:
            inc = -integrate(self._f, t, t_anchor, self._cfg).value
        value = v_anchor + inc
        with self._lock:
            i = bisect.bisect_left(self._ts, t)
            if not (i < len(self._ts) and self._ts[i] == t):
                self._ts.insert(i, t)
                self._vals.insert(i, value)
        return value


def superspiral_radius(p: SuperspiralParams, theta: float) -> float:
    """Radius of curvature ``rho(theta) = scale * 2F1(a, b; c; -theta)``."""
    if theta < 0:
        raise NumericsDomainError("theta must be >= 0")
    return p.scale * gauss_2f1(p.a, p.b, p.c, -theta)


def superspiral_point(
    p: SuperspiralParams, theta: float, cfg: ToleranceConfig = DEFAULT_TOLERANCE
) -> np.ndarray:
    """Position in the tangent-angle parametrization.

    ``x = integral of rho(t) cos t`` and ``y = integral of rho(t) sin t`` over
    [0, theta]; the tangent angle at the returned point is theta itself.
    """
    if theta < 0:
        raise NumericsDomainError("theta must be >= 0")
    x = integrate(lambda t: superspiral_radius(p, t) * math.cos(t), 0.0, theta, cfg).value
    y = integrate(lambda t: superspiral_radius(p, t) * math.sin(t), 0.0, theta, cfg).value
    return np.array([x, y])


def superspiral_arclength(
    p: SuperspiralParams, theta: float, cfg: ToleranceConfig = DEFAULT_TOLERANCE
) -> float:
    """Arc length from the spiral origin: integral of rho over [0, theta]."""
    if theta < 0:
        raise NumericsDomainError("theta must be >= 0")
    return integrate(lambda t: superspiral_radius(p, t), 0.0, theta, cfg).value


class Superspiral:
    """Superspiral as a planar-curve object parametrized by tangent angle."""

    closed = False

    def __init__(
        self,
        params: SuperspiralParams,
        domain: tuple[float, float] = (0.0, 3.0),
        cfg: ToleranceConfig = DEFAULT_TOLERANCE,
    ):
        if domain[0] < 0 or domain[1] <= domain[0]:
            raise ValueError("domain must satisfy 0 <= t0 < t1")
        self.params = params
        self.domain = (float(domain[0]), float(domain[1]))
        self.cfg = cfg
        self._x = _CachedAntiderivative(lambda t: self.radius(t) * math.cos(t), 0.0, cfg)
        self._y = _CachedAntiderivative(lambda t: self.radius(t) * math.sin(t), 0.0, cfg)
        self._s = _CachedAntiderivative(self.radius, 0.0, cfg)

    def radius(self, theta: float) -> float:
        value = superspiral_radius(self.params, theta)
        if value <= 0:
            # tangent-angle parametrization needs kappa > 0 throughout; the
            # hypergeometric radius stays positive when c >= min(a, b) > 0
            raise NumericsDomainError(
                f"radius of curvature {value!r} at theta={theta!r}: parameters "
                f"(a={self.params.a}, b={self.params.b}, c={self.params.c}) leave "
                "the monotone superspiral family on this range"
            )
        return value

    def _radius_deriv(self, theta: float, order: int) -> float:
        # d/dz 2F1(a,b;c;z) = (ab/c) 2F1(a+1,b+1;c+1;z), applied `order` times;
        # the -theta argument contributes (-1)^order.
        p = self.params
        coef = p.scale
        a, b, c = p.a, p.b, p.c
        for _ in range(order):
            coef *= -a * b / c
            a, b, c = a + 1.0, b + 1.0, c + 1.0
        return coef * gauss_2f1(a, b, c, -theta)

    def point(self, t) -> np.ndarray:
        if np.ndim(t) == 0:
            return np.array([self._x(float(t)), self._y(float(t))])
        return np.array([[self._x(float(v)), self._y(float(v))] for v in np.asarray(t).ravel()])

    def derivative(self, t: float, order: int = 1) -> np.ndarray:
        th = float(t)
        cs, sn = math.cos(th), math.sin(th)
        rho = self.radius(th)
        if order == 1:
            return np.array([rho * cs, rho * sn])
        r1 = self._radius_deriv(th, 1)
        if order == 2:
            return np.array([r1 * cs - rho * sn, r1 * sn + rho * cs])
        if order == 3:
            r2 = self._radius_deriv(th, 2)
            return np.array(
                [r2 * cs - 2.0 * r1 * sn - rho * cs, r2 * sn + 2.0 * r1 * cs - rho * sn]
            )
        raise ValueError("order must be 1, 2 or 3")

    def curvature(self, t):
        if np.ndim(t) == 0:
            return 1.0 / self.radius(float(t))
        return np.array([1.0 / self.radius(float(v)) for v in np.asarray(t).ravel()])

    def curvature_rate(self, t):
        # d(kappa)/ds = (d(kappa)/dtheta) / rho with kappa = 1/rho
        if np.ndim(t) != 0:
            return np.array([self.curvature_rate(float(v)) for v in np.asarray(t).ravel()])
        rho = self.radius(float(t))
        return -self._radius_deriv(float(t), 1) / rho**3

    def arc_length(self, t0: float, t1: float) -> float:
        return self._s(float(t1)) - self._s(float(t0))


def lac_curvature(p: LacParams, s: float) -> float:
    """Curvature of a log-aesthetic curve at arc length ``s``.

    ``kappa = (c0 + c1 s)^(-1/alpha)`` for alpha != 0, and the degenerate
    exponential law ``kappa = c0 exp(-c1 s)`` for alpha == 0.
    """
    if p.alpha == 0.0:
        return p.c0 * math.exp(-p.c1 * s)
    base = p.c0 + p.c1 * s
    if base <= 0:
        raise NumericsDomainError(
            f"curvature law base c0 + c1*s = {base!r} must be positive at s={s!r}"
        )
    return base ** (-1.0 / p.alpha)


class IntrinsicCurve:
    """Curve reconstructed from its curvature law kappa(s), arc-length parametrized."""

    closed = False

    def __init__(
        self,
        kappa: Callable[[float], float],
        s_range: tuple[float, float],
        theta0: float = 0.0,
        origin=(0.0, 0.0),
        cfg: ToleranceConfig = DEFAULT_TOLERANCE,
    ):
        if s_range[1] <= s_range[0]:
            raise ValueError("s_range must be increasing")
        self.kappa = kappa
        self.domain = (float(s_range[0]), float(s_range[1]))
        self.theta0 = float(theta0)
        self.origin = np.asarray(origin, dtype=float)
        self.cfg = cfg
        s0 = self.domain[0]
        self._theta = _CachedAntiderivative(kappa, s0, cfg)
        self._x = _CachedAntiderivative(lambda u: math.cos(self.angle(u)), s0, cfg)
        self._y = _CachedAntiderivative(lambda u: math.sin(self.angle(u)), s0, cfg)

    def angle(self, s: float) -> float:
        return self.theta0 + self._theta(float(s))

    def point(self, s) -> np.ndarray:
        if np.ndim(s) == 0:
            return self.origin + np.array([self._x(float(s)), self._y(float(s))])
        return np.array([self.point(float(v)) for v in np.asarray(s).ravel()])

    def __call__(self, s):
        return self.point(s)

    def derivative(self, s: float, order: int = 1) -> np.ndarray:
        th = self.angle(float(s))
        t_vec = np.array([math.cos(th), math.sin(th)])
        n_vec = np.array([-math.sin(th), math.cos(th)])
        if order == 1:
            return t_vec
        k = self.kappa(float(s))
        if order == 2:
            return k * n_vec
        if order == 3:
            return self.curvature_rate(float(s)) * n_vec - k * k * t_vec
        raise ValueError("order must be 1, 2 or 3")

    def curvature(self, s):
        if np.ndim(s) == 0:
            return self.kappa(float(s))
        return np.array([self.kappa(float(v)) for v in np.asarray(s).ravel()])

    def curvature_rate(self, s, h: float = 1e-6):
        if np.ndim(s) != 0:
            return np.array([self.curvature_rate(float(v), h) for v in np.asarray(s).ravel()])
        lo, hi = self.domain
        h = min(h, 0.5 * (hi - lo))
        a = max(lo, float(s) - h)
        b = min(hi, float(s) + h)
        return (self.kappa(b) - self.kappa(a)) / (b - a)

    def arc_length(self, s0: float, s1: float) -> float:
        return float(s1) - float(s0)


def integrate_intrinsic(
    kappa: Callable[[float], float],
    s_range: tuple[float, float],
    theta0: float = 0.0,
    origin=(0.0, 0.0),
    cfg: ToleranceConfig = DEFAULT_TOLERANCE,
) -> IntrinsicCurve:
    """Realise the intrinsic equation kappa(s) as a planar curve.

    The returned object is callable: ``curve(s)`` is the position at arc
    length ``s``, with tangent angle ``theta0 + integral of kappa``.
    """
    return IntrinsicCurve(kappa, s_range, theta0, origin, cfg)


def build_schedule(sched: SampleSchedule) -> np.ndarray:
    """Parameter values t0, t0+h1, ... with geometrically graded increments."""
    if sched.n_points == 2:
        return np.array([sched.t0, sched.t0 + sched.h_first])
    n_inc = sched.n_points - 1
    ratio = (sched.h_last / sched.h_first) ** (1.0 / (n_inc - 1))
    increments = sched.h_first * ratio ** np.arange(n_inc)
    return sched.t0 + np.concatenate([[0.0], np.cumsum(increments)])


def sample_hermite(
    curve,
    schedule,
    cfg: ToleranceConfig = DEFAULT_TOLERANCE,
    zero_curvature_tol: float = 0.0,
) -> HermiteTable:
    """Sample a Hermite table (points, derivatives, curvatures, normals, lengths).

    ``schedule`` is either a :class:`SampleSchedule` or an explicit array of
    parameter values inside the curve's domain.  Curvatures whose magnitude
    does not exceed ``zero_curvature_tol`` (or that come out non-finite, i.e.
    infinite radius) are recorded as zero with no curvature normal.
    """
    if isinstance(schedule, SampleSchedule):
        ts = build_schedule(schedule)
    else:
        ts = np.asarray(schedule, dtype=float)
    if ts.size < 2 or np.any(np.diff(ts) <= 0):
        raise ValueError("schedule must contain at least 2 strictly increasing parameters")
    lo, hi = curve.domain
    if ts[0] < lo - 1e-12 or ts[-1] > hi + 1e-12:
        raise ValueError(f"schedule [{ts[0]}, {ts[-1]}] outside curve domain [{lo}, {hi}]")

    n = ts.size
    points = np.empty((n, 2))
    derivs = np.empty((n, 2))
    kappas = np.empty(n)
    normals = np.zeros((n, 2))
    for i, t in enumerate(ts):
        points[i] = curve.point(t)
        d = curve.derivative(t, 1)
        derivs[i] = d
        k = curve.curvature(t)
        if not math.isfinite(k) or abs(k) <= zero_curvature_tol:
            k = 0.0
        kappas[i] = abs(k)
        if k != 0.0:
            tangent = d / np.linalg.norm(d)
            left = np.array([-tangent[1], tangent[0]])
            normals[i] = left if k > 0 else -left
    seg = np.array([curve.arc_length(ts[i], ts[i + 1]) for i in range(n - 1)])
    return HermiteTable(points, derivs, kappas, normals, seg)
