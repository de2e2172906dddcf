"""Foundation numerics: adaptive quadrature, Gauss hypergeometric 2F1, root bracketing.

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

__all__ = [
    "QuadratureResult",
    "ToleranceConfig",
    "DEFAULT_TOLERANCE",
    "NumericsDomainError",
    "NonConvergenceError",
    "PrecisionError",
    "integrate",
    "gauss_2f1",
    "bracket_root",
]


class NumericsDomainError(ValueError):
    """Raised when an input is outside the mathematical domain of an operation.

    ``code`` is a stable machine-readable identifier for API error mapping.
    """

    def __init__(self, message: str, code: str = "NUMERIC_DOMAIN"):
        super().__init__(message)
        self.code = code


class PrecisionError(ArithmeticError):
    """Raised when a series or iteration cannot reach the requested accuracy."""


class NonConvergenceError(ArithmeticError):
    """Adaptive refinement hit its subdivision budget.

    Carries the best estimate computed so far in ``best`` together with its
    error estimate, so callers can decide whether to keep going with a
    degraded value.
    """

    def __init__(self, message: str, best: float, error_estimate: float, subdivisions: int):
        super().__init__(message)
        self.best = best
        self.error_estimate = error_estimate
        self.subdivisions = subdivisions


@dataclass(frozen=True)
class QuadratureResult:
    """Value of a definite integral with an a-posteriori error estimate."""

    value: float
    error_estimate: float
    subdivisions: int

    def __post_init__(self):
        if self.error_estimate < 0:
            raise ValueError("error_estimate must be >= 0")
        if self.subdivisions < 1:
            raise ValueError("subdivisions must be >= 1")


@dataclass(frozen=True)
class ToleranceConfig:
    """Accuracy targets for adaptive integration."""

    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2000

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")


DEFAULT_TOLERANCE = ToleranceConfig()


# 7-point Gauss / 15-point Kronrod pair on [-1, 1].
# Kronrod abscissae; every second one is a Gauss node.
_XK = (
    -0.991455371120813, -0.949107912342759, -0.864864423359769,
    -0.741531185599394, -0.586087235467691, -0.405845151377397,
    -0.207784955007898, 0.0, 0.207784955007898, 0.405845151377397,
    0.586087235467691, 0.741531185599394, 0.864864423359769,
    0.949107912342759, 0.991455371120813,
)
_WK = (
    0.022935322010529, 0.063092092629979, 0.104790010322250,
    0.140653259715525, 0.169004726639267, 0.190350578064785,
    0.204432940075298, 0.209482141084728, 0.204432940075298,
    0.190350578064785, 0.169004726639267, 0.140653259715525,
    0.104790010322250, 0.063092092629979, 0.022935322010529,
)
# Gauss weights aligned with the odd-index Kronrod nodes.
_WG = (
    0.129484966168870, 0.279705391489277, 0.381830050505119,
    0.417959183673469, 0.381830050505119, 0.279705391489277,
    0.129484966168870,
)


def _gauss_kronrod_panel(f: Callable[[float], float], a: float, b: float) -> tuple[float, float]:
    """One G7/K15 panel on [a, b]: returns (kronrod value, error estimate)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    gauss = 0.0
    kronrod = 0.0
    for i in range(15):
        x = mid + half * _XK[i]
        fx = f(x)
        if not math.isfinite(fx):
            raise NumericsDomainError(f"integrand returned non-finite value {fx!r} at x={x!r}")
        kronrod += _WK[i] * fx
        if i % 2 == 1:
            gauss += _WG[i // 2] * fx
    kronrod *= half
    gauss *= half
    # QUADPACK-style sharpened estimate of the K15 error from the K15-G7 gap.
    diff = abs(kronrod - gauss)
    err = diff if diff == 0.0 else min(diff, (200.0 * diff) ** 1.5)
    return kronrod, err


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    cfg: ToleranceConfig = DEFAULT_TOLERANCE,
) -> QuadratureResult:
    """Adaptively integrate ``f`` over [a, b] to within cfg's tolerances.

    Uses the 7-point Gauss / 15-point Kronrod pair; the interval with the
    largest Kronrod-Gauss discrepancy is bisected until the summed error
    estimate drops below ``max(abs_tol, rel_tol * |value|)``.

    Raises :class:`NonConvergenceError` (carrying the best estimate) if the
    subdivision budget is exhausted, and :class:`NumericsDomainError` if the
    integrand produces NaN or infinity.
    """
    if not (math.isfinite(a) and math.isfinite(b)):
        raise NumericsDomainError("integration bounds must be finite")
    if a > b:
        raise NumericsDomainError(f"require a <= b, got a={a!r} > b={b!r}")
    if a == b:
        return QuadratureResult(0.0, 0.0, 1)

    value, err = _gauss_kronrod_panel(f, a, b)
    intervals = [(err, a, b, value)]
    total = value
    total_err = err
    while True:
        if total_err <= max(cfg.abs_tol, cfg.rel_tol * abs(total)):
            return QuadratureResult(total, total_err, len(intervals))
        if len(intervals) >= cfg.max_subdivisions:
            raise NonConvergenceError(
                f"quadrature did not converge within {cfg.max_subdivisions} subdivisions "
                f"(error estimate {total_err:.3e})",
                best=total,
                error_estimate=total_err,
                subdivisions=len(intervals),
            )
        worst = max(range(len(intervals)), key=lambda i: intervals[i][0])
        e0, l, r, v0 = intervals.pop(worst)
        m = 0.5 * (l + r)
        v1, e1 = _gauss_kronrod_panel(f, l, m)
        v2, e2 = _gauss_kronrod_panel(f, m, r)
        intervals.append((e1, l, m, v1))
        intervals.append((e2, m, r, v2))
        total += (v1 + v2) - v0
        total_err += (e1 + e2) - e0
        # Rounding in the incremental sums can leave a stale error total;
        # refresh it from scratch once it gets implausibly small.
        if total_err < 0:
            total = sum(t[3] for t in intervals)
            total_err = sum(t[0] for t in intervals)


_SERIES_MAX_TERMS = 4000


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function 2F1(a, b; c; z) for z <= 0.

    The argument is mapped into [0, 1) by the Pfaff transformation
    ``2F1(a, b; c; z) = (1 - z)^(-a) * 2F1(a, c - b; c; z / (z - 1))``
    and the power series is summed with term-ratio termination (three
    consecutive terms below 1e-16 of the partial sum).
    """
    if c <= 0 and c == int(c):
        raise NumericsDomainError(
            f"c must not be zero or a negative integer, got c={c!r}",
            code="HYPERGEOMETRIC_DOMAIN",
        )
    if z > 0:
        raise NumericsDomainError(
            f"only z <= 0 is supported, got z={z!r}", code="HYPERGEOMETRIC_DOMAIN"
        )
    if z == 0:
        return 1.0

    w = z / (z - 1.0)  # in [0, 1)
    if w >= 1.0 - 1e-12:
        raise PrecisionError(f"transformed argument {w!r} too close to 1; series would not converge")
    prefactor = (1.0 - z) ** (-a)
    bp = c - b

    term = 1.0
    total = 1.0
    small_streak = 0
    for n in range(_SERIES_MAX_TERMS):
        term *= (a + n) * (bp + n) / ((c + n) * (n + 1.0)) * w
        total += term
        if abs(term) < 1e-16 * abs(total):
            small_streak += 1
            if small_streak >= 3:
                return prefactor * total
        else:
            small_streak = 0
    raise PrecisionError(
        f"hypergeometric series did not converge in {_SERIES_MAX_TERMS} terms for "
        f"(a={a}, b={b}, c={c}, z={z})"
    )


def bracket_root(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-12,
) -> float:
    """Root of ``f`` inside [a, b], which must bracket a sign change.

    Bisection keeps the bracket valid; a secant step replaces the midpoint
    whenever it falls safely inside the bracket, which restores superlinear
    convergence on smooth functions.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    fa = f(a)
    fb = f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise NumericsDomainError(f"no sign change on [{a!r}, {b!r}]: f(a)={fa!r}, f(b)={fb!r}")

    for _ in range(200):
        if b - a <= tol:
            break
        # Secant candidate, accepted only when it lands inside the bracket
        # with margin; otherwise fall back to bisection.
        denom = fb - fa
        if denom != 0.0:
            x = b - fb * (b - a) / denom
        else:
            x = 0.5 * (a + b)
        margin = 0.01 * (b - a)
        if not (a + margin < x < b - margin):
            x = 0.5 * (a + b)
        fx = f(x)
        if fx == 0.0:
            return x
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
    return a if abs(fa) <= abs(fb) else b
