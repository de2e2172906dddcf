"""Shared machinery for constrained fair-spline solves.

A :class:`SplineSpace` is a polynomial B-spline space (clamped or periodic)
over fixed breakpoints.  :func:`solve_fair_curve` finds control points that
satisfy hard linear constraints (interpolation, tangency) exactly and spend
every leftover degree of freedom minimizing a fairing functional, either
``variation`` = integral of (d kappa / ds)^2 ds  or  ``energy`` = integral of
kappa^2 ds.

The functional is discretized on fixed per-span Gauss points and minimized as
a nonlinear least-squares problem in null-space coordinates; constraint
elimination keeps the hard constraints exact to linear-solve precision
regardless of how far the optimizer runs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import BSpline
from scipy.optimize import least_squares

from .nurbs import GeometryError, NurbsCurve, _periodic_from_block, clamped_knots

__all__ = ["SplineSpace", "FairSolveResult", "FairingNonConvergence", "solve_fair_curve"]

_TINY_SPEED = 1e-30


class FairingNonConvergence(ArithmeticError):
    """Optimizer hit its evaluation budget; carries the best curve found."""

    def __init__(self, message: str, best: "NurbsCurve", info: dict):
        super().__init__(message)
        self.best = best
        self.info = info


class SplineSpace:
    """Polynomial spline space of one degree over simple breakpoints."""

    def __init__(self, degree: int, breakpoints, closed: bool = False):
        self.degree = int(degree)
        self.breakpoints = np.asarray(breakpoints, dtype=float)
        if np.any(np.diff(self.breakpoints) <= 0):
            raise GeometryError("breakpoints must be strictly increasing")
        self.closed = bool(closed)
        n_span = len(self.breakpoints) - 1
        if closed:
            self.n_unique = n_span
            self.period = float(self.breakpoints[-1] - self.breakpoints[0])
            block = self.breakpoints[:-1]
            p = self.degree
            self.knots = np.concatenate(
                [block[-p:] - self.period, block, block[: p + 1] + self.period]
            )
        else:
            self.knots = clamped_knots(self.degree, self.breakpoints)
            self.n_unique = len(self.knots) - self.degree - 1
        self.n_full = len(self.knots) - self.degree - 1
        self._identity = np.eye(self.n_full)

    def _fold(self, full: np.ndarray) -> np.ndarray:
        """Fold periodic wrap columns onto their unique control indices."""
        if not self.closed:
            return full
        p, n = self.degree, self.n_unique
        out = np.zeros((full.shape[0], n))
        for j in range(self.n_full):
            out[:, (j - p) % n] += full[:, j]
        return out

    def design(self, ts, deriv: int = 0) -> np.ndarray:
        """Design matrix of basis-function derivatives at ``ts`` (folded)."""
        ts = np.asarray(ts, dtype=float)
        base = BSpline(self.knots, self._identity, self.degree)
        if deriv:
            base = base.derivative(deriv)
        lo, hi = self.breakpoints[0], self.breakpoints[-1]
        return self._fold(np.atleast_2d(base(np.clip(ts, lo, hi))))

    def quadrature(self, per_span: int = 7) -> tuple[np.ndarray, np.ndarray]:
        """Per-span Gauss-Legendre nodes and weights over the whole domain."""
        x, w = np.polynomial.legendre.leggauss(per_span)
        lo = self.breakpoints[:-1]
        hi = self.breakpoints[1:]
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        weights = (half[:, None] * w[None, :]).ravel()
        return nodes, weights

    def curve(self, coeffs: np.ndarray) -> NurbsCurve:
        coeffs = np.asarray(coeffs, dtype=float).reshape(self.n_unique, 2)
        if self.closed:
            # block order: basis i starts at block knot i, matching _fold
            return _periodic_from_block(
                self.degree, self.breakpoints[:-1], self.period, coeffs
            )
        return NurbsCurve(self.degree, self.knots, coeffs)

    def bending_matrix(self) -> np.ndarray:
        """Gram matrix of second-derivative inner products (fairing surrogate)."""
        nodes, weights = self.quadrature(per_span=max(7, self.degree))
        d2 = self.design(nodes, deriv=2)
        return d2.T @ (weights[:, None] * d2)


@dataclass
class FairSolveResult:
    coeffs: np.ndarray            # (n_unique, 2)
    functional_value: float
    initial_functional: float
    iterations: int
    sigmas: np.ndarray | None     # contact parameters for moving targets
    converged: bool


def _stack(matrix_x: np.ndarray, matrix_y: np.ndarray | None = None) -> np.ndarray:
    """Block-diagonal [A 0; 0 A] row layout over stacked [Px; Py] unknowns."""
    a = matrix_x
    b = matrix_x if matrix_y is None else matrix_y
    top = np.hstack([a, np.zeros_like(a)])
    bot = np.hstack([np.zeros_like(b), b])
    return np.vstack([top, bot])


def solve_fair_curve(
    space: SplineSpace,
    pos_ts,
    pos_targets=None,
    *,
    moving_targets=None,
    dir_ts=None,
    dir_vecs=None,
    dir_mode: str = "hard",
    kappa_ts=None,
    kappa_targets=None,
    kappa_weight: float = 100.0,
    functional: str = "variation",
    quad_per_span: int = 7,
    max_iterations: int = 150,
    gradient_tol: float = 1e-10,
    dir_weight: float = 1e3,
    speed_reg: float = 3e-2,
    sigma_bounds: tuple[float, float] = (0.02, 0.98),
) -> FairSolveResult:
    """Fair interpolating/tangent spline in ``space``.

    ``pos_targets`` pins the curve at ``pos_ts`` exactly.  Alternatively
    ``moving_targets = (base, direction)`` pins each site to the moving point
    ``base[i] + sigma[i] * direction[i]`` with the contact coordinate sigma a
    bounded unknown of the same minimization.  Tangent directions at
    ``dir_ts`` are enforced exactly (``dir_mode='hard'``) or as stiff
    least-squares rows (``'soft'``, used when the space cannot carry them all).

    The fairing functional is invariant under reparametrization, which leaves
    flat valleys in control-point space; a weak penalty on parametric speed
    variation (``speed_reg``) selects the near-arc-length representative and
    keeps the optimizer out of those valleys.
    """
    n = space.n_unique
    pos_ts = np.asarray(pos_ts, dtype=float)
    b0 = space.design(pos_ts, 0)

    hard_rows = [_stack(b0)]
    n_sigma = 0
    if moving_targets is not None:
        base, direction = moving_targets
        base = np.asarray(base, dtype=float)
        direction = np.asarray(direction, dtype=float)
        n_sigma = len(base)
        rhs0 = np.concatenate([base[:, 0], base[:, 1]])
        rhs_sigma = np.vstack([np.diag(direction[:, 0]), np.diag(direction[:, 1])])
    else:
        t = np.asarray(pos_targets, dtype=float)
        rhs0 = np.concatenate([t[:, 0], t[:, 1]])
        rhs_sigma = np.zeros((2 * len(pos_ts), 0))

    if dir_ts is not None and dir_mode == "hard":
        d1 = space.design(np.asarray(dir_ts, dtype=float), 1)
        tv = np.asarray(dir_vecs, dtype=float)
        rows = np.hstack([tv[:, 1:2] * d1, -tv[:, 0:1] * d1])
        hard_rows.append(rows)
        rhs0 = np.concatenate([rhs0, np.zeros(len(tv))])
        rhs_sigma = np.vstack([rhs_sigma, np.zeros((len(tv), n_sigma))])

    H = np.vstack(hard_rows)
    # null space and minimum-norm particular solutions
    u, s, vt = np.linalg.svd(H, full_matrices=True)
    rank = int(np.sum(s > max(H.shape) * np.finfo(float).eps * (s[0] if len(s) else 1.0)))
    null = vt[rank:].T                         # (2n, n_free)
    n_free = null.shape[1]
    pinv = vt[:rank].T @ np.diag(1.0 / s[:rank]) @ u[:, :rank].T
    p_part0 = pinv @ rhs0                      # (2n,)
    p_part_sigma = pinv @ rhs_sigma            # (2n, n_sigma)

    # fairing functional discretization
    nodes, wq = space.quadrature(quad_per_span)
    D1 = space.design(nodes, 1)
    D2 = space.design(nodes, 2)
    D3 = space.design(nodes, 3) if functional == "variation" else None

    soft_dir = dir_ts is not None and dir_mode == "soft"
    if soft_dir:
        Dd = space.design(np.asarray(dir_ts, dtype=float), 1)
        tvs = np.asarray(dir_vecs, dtype=float)
        tvs = tvs / np.linalg.norm(tvs, axis=1, keepdims=True)

    soft_kappa = kappa_ts is not None
    if soft_kappa:
        Dk1 = space.design(np.asarray(kappa_ts, dtype=float), 1)
        Dk2 = space.design(np.asarray(kappa_ts, dtype=float), 2)
        k_targets = np.asarray(kappa_targets, dtype=float)
        k_scale = max(np.abs(k_targets).max(), 1e-300)

    w_total = float(np.sum(wq))

    def control(x: np.ndarray) -> np.ndarray:
        xi = x[:n_free]
        stacked = p_part0 + null @ xi
        if n_sigma:
            stacked = stacked + p_part_sigma @ x[n_free:]
        return np.column_stack([stacked[:n], stacked[n:]])

    def _assemble_jp(rows, blocks) -> np.ndarray:
        """Residual Jacobian wrt stacked control points [Px; Py].

        ``blocks`` maps a design matrix to its (dr/d dx, dr/d dy) factors.
        """
        jp = np.zeros((rows, 2 * n))
        for design, gx, gy in blocks:
            jp[:, :n] += gx[:, None] * design
            jp[:, n:] += gy[:, None] * design
        return jp

    def fair_block(P: np.ndarray, with_jac: bool):
        d1 = D1 @ P
        d2 = D2 @ P
        v2 = np.maximum(d1[:, 0] ** 2 + d1[:, 1] ** 2, _TINY_SPEED)
        v = np.sqrt(v2)
        cr12 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        if functional == "energy":
            kappa = cr12 / (v2 * v)
            scale = np.sqrt(wq * v)
            r = kappa * scale
            if not with_jac:
                return r, None
            # dr = dkappa * scale + kappa * dscale; v depends on d1 only
            dk_d1x = d2[:, 1] / (v2 * v) - 3.0 * cr12 * d1[:, 0] / (v2 * v2 * v)
            dk_d1y = -d2[:, 0] / (v2 * v) - 3.0 * cr12 * d1[:, 1] / (v2 * v2 * v)
            dk_d2x = -d1[:, 1] / (v2 * v)
            dk_d2y = d1[:, 0] / (v2 * v)
            dscale_dv = 0.5 * np.sqrt(wq / v)
            g1x = dk_d1x * scale + kappa * dscale_dv * d1[:, 0] / v
            g1y = dk_d1y * scale + kappa * dscale_dv * d1[:, 1] / v
            jp = _assemble_jp(len(r), [(D1, g1x, g1y), (D2, dk_d2x * scale, dk_d2y * scale)])
            return r, jp

        d3 = D3 @ P
        cr13 = d1[:, 0] * d3[:, 1] - d1[:, 1] * d3[:, 0]
        dot12 = d1[:, 0] * d2[:, 0] + d1[:, 1] * d2[:, 1]
        v3, v5, v7 = v2 * v, v2 * v2 * v, v2 * v2 * v2 * v
        kappa_u = cr13 / v3 - 3.0 * cr12 * dot12 / v5
        scale = np.sqrt(wq / v)
        r = kappa_u * scale
        if not with_jac:
            return r, None
        dku_d1x = (d3[:, 1] / v3 - 3.0 * cr13 * d1[:, 0] / v5
                   - 3.0 * (d2[:, 1] * dot12 + cr12 * d2[:, 0]) / v5
                   + 15.0 * cr12 * dot12 * d1[:, 0] / v7)
        dku_d1y = (-d3[:, 0] / v3 - 3.0 * cr13 * d1[:, 1] / v5
                   - 3.0 * (-d2[:, 0] * dot12 + cr12 * d2[:, 1]) / v5
                   + 15.0 * cr12 * dot12 * d1[:, 1] / v7)
        dku_d2x = -3.0 * (-d1[:, 1] * dot12 + cr12 * d1[:, 0]) / v5
        dku_d2y = -3.0 * (d1[:, 0] * dot12 + cr12 * d1[:, 1]) / v5
        dku_d3x = -d1[:, 1] / v3
        dku_d3y = d1[:, 0] / v3
        # scale = sqrt(w/v) depends on d1: dscale/dv = -0.5 sqrt(w) v^{-3/2}
        dscale_dv = -0.5 * np.sqrt(wq) / (v * np.sqrt(v))
        g1x = dku_d1x * scale + kappa_u * dscale_dv * d1[:, 0] / v
        g1y = dku_d1y * scale + kappa_u * dscale_dv * d1[:, 1] / v
        jp = _assemble_jp(len(r), [
            (D1, g1x, g1y),
            (D2, dku_d2x * scale, dku_d2y * scale),
            (D3, dku_d3x * scale, dku_d3y * scale),
        ])
        return r, jp

    def speed_block(P: np.ndarray, v_ref: float, with_jac: bool):
        # penalize variation of parametric speed about its weighted mean; a
        # uniform-speed curve of any overall speed pays nothing
        d1 = D1 @ P
        v = np.sqrt(np.maximum(d1[:, 0] ** 2 + d1[:, 1] ** 2, _TINY_SPEED))
        mean_v = float(np.sum(wq * v) / w_total)
        coef = speed_reg * np.sqrt(wq / w_total) / v_ref
        r = coef * (v - mean_v)
        if not with_jac:
            return r, None
        ux = d1[:, 0] / v
        uy = d1[:, 1] / v
        avg_x = (wq / w_total) @ (ux[:, None] * D1)
        avg_y = (wq / w_total) @ (uy[:, None] * D1)
        jp = np.zeros((len(r), 2 * n))
        jp[:, :n] = coef[:, None] * (ux[:, None] * D1 - avg_x[None, :])
        jp[:, n:] = coef[:, None] * (uy[:, None] * D1 - avg_y[None, :])
        return r, jp

    def dir_block(P: np.ndarray, with_jac: bool):
        d1 = Dd @ P
        v = np.maximum(np.hypot(d1[:, 0], d1[:, 1]), _TINY_SPEED)
        cross = d1[:, 0] * tvs[:, 1] - d1[:, 1] * tvs[:, 0]
        r = dir_weight * cross / v
        if not with_jac:
            return r, None
        gx = dir_weight * (tvs[:, 1] / v - cross * d1[:, 0] / v**3)
        gy = dir_weight * (-tvs[:, 0] / v - cross * d1[:, 1] / v**3)
        return r, _assemble_jp(len(r), [(Dd, gx, gy)])

    def kappa_block(P: np.ndarray, with_jac: bool):
        d1 = Dk1 @ P
        d2 = Dk2 @ P
        v2 = np.maximum(d1[:, 0] ** 2 + d1[:, 1] ** 2, _TINY_SPEED)
        v = np.sqrt(v2)
        cr12 = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        kap = cr12 / (v2 * v)
        coef = kappa_weight / k_scale
        r = coef * (kap - k_targets)
        if not with_jac:
            return r, None
        g1x = coef * (d2[:, 1] / (v2 * v) - 3.0 * cr12 * d1[:, 0] / (v2 * v2 * v))
        g1y = coef * (-d2[:, 0] / (v2 * v) - 3.0 * cr12 * d1[:, 1] / (v2 * v2 * v))
        g2x = coef * (-d1[:, 1] / (v2 * v))
        g2y = coef * (d1[:, 0] / (v2 * v))
        return r, _assemble_jp(len(r), [(Dk1, g1x, g1y), (Dk2, g2x, g2y)])

    def fair_residuals(P: np.ndarray) -> np.ndarray:
        return fair_block(P, False)[0]

    def _all_blocks(P: np.ndarray, v_ref: float, with_jac: bool):
        blocks = [fair_block(P, with_jac)]
        if speed_reg > 0:
            blocks.append(speed_block(P, v_ref, with_jac))
        if soft_dir:
            blocks.append(dir_block(P, with_jac))
        if soft_kappa:
            blocks.append(kappa_block(P, with_jac))
        return blocks

    def residuals(x: np.ndarray, v_ref: float) -> np.ndarray:
        P = control(x)
        return np.concatenate([b[0] for b in _all_blocks(P, v_ref, False)])

    def jacobian(x: np.ndarray, v_ref: float) -> np.ndarray:
        P = control(x)
        jp = np.vstack([b[1] for b in _all_blocks(P, v_ref, True)])
        basis = null if not n_sigma else np.hstack([null, p_part_sigma])
        return jp @ basis

    # initial guess: minimum bending-surrogate element of the constraint set
    M = space.bending_matrix()
    M2 = np.zeros((2 * n, 2 * n))
    M2[:n, :n] = M
    M2[n:, n:] = M
    x0 = np.zeros(n_free + n_sigma)
    if n_sigma:
        x0[n_free:] = 0.5
    if n_free:
        rhs_center = p_part0 + (p_part_sigma @ x0[n_free:] if n_sigma else 0.0)
        A = null.T @ M2 @ null
        b = -(null.T @ (M2 @ rhs_center))
        try:
            x0[:n_free] = np.linalg.solve(A, b)
        except np.linalg.LinAlgError:
            x0[:n_free] = np.linalg.lstsq(A, b, rcond=None)[0]

    P0 = control(x0)
    f0 = float(np.sum(fair_residuals(P0) ** 2))
    d1_init = D1 @ P0
    v_init = np.sqrt(np.maximum(d1_init[:, 0] ** 2 + d1_init[:, 1] ** 2, _TINY_SPEED))
    v_ref = float(np.sum(wq * v_init) / w_total)

    if n_free == 0 and n_sigma == 0 and not soft_dir:
        return FairSolveResult(P0, f0, f0, 0, None, True)

    lower = np.full(n_free + n_sigma, -np.inf)
    upper = np.full(n_free + n_sigma, np.inf)
    if n_sigma:
        lower[n_free:] = sigma_bounds[0]
        upper[n_free:] = sigma_bounds[1]

    res = least_squares(
        residuals,
        x0,
        jac=jacobian,
        method="trf",
        bounds=(lower, upper),
        ftol=1e-14,
        xtol=1e-14,
        gtol=gradient_tol,
        max_nfev=max_iterations * 20,
        args=(v_ref,),
    )

    coeffs = control(res.x)
    f1 = float(np.sum(fair_residuals(coeffs) ** 2))
    sigmas = res.x[n_free:] if n_sigma else None
    # a budget stop still counts as converged when the first-order optimality
    # is tiny relative to the cost: the geometry stopped moving long before
    converged = res.status != 0 or res.optimality <= 1e-4 * max(1.0, res.cost)
    result = FairSolveResult(coeffs, f1, f0, int(res.nfev), sigmas, converged)
    if not converged:
        raise FairingNonConvergence(
            f"fairing optimizer exhausted its budget ({res.nfev} evaluations, "
            f"optimality {res.optimality:.3e})",
            space.curve(coeffs),
            {"result": result},
        )
    return result
