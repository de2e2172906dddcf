"""v-curve fairing: high-continuity fair interpolants of support and tangent polylines.

The v-curve is realised as a degree-6 B-spline (periodic when closed) whose
interior knots subdivide each polyline span; the subdivision density follows
the local turning angle so strongly bent regions get enough freedom for the
fairing functional to flatten curvature oscillations.  Interpolation and
tangency constraints are eliminated exactly; the remaining control-point
freedoms minimize the configured fairing functional.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._spline_fit import FairingNonConvergence, SplineSpace, solve_fair_curve
from .analytic import HermiteTable, sample_hermite
from .nurbs import NurbsCurve, line_curve

__all__ = [
    "Polyline",
    "FairingConfig",
    "FairedCurve",
    "ValidationError",
    "vcurve_from_support",
    "vcurve_from_tangent",
    "hermite_of",
    "FairingNonConvergence",
]

FAIRING_DEGREE = 6


class ValidationError(ValueError):
    """Input polyline violates a structural invariant; carries a stable code."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class Polyline:
    """Ordered planar vertices with interpretation and topology flags."""

    vertices: np.ndarray            # (n, 2)
    kind: str = "support"           # support | tangent
    topology: str = "open"          # open | closed

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2:
            raise ValidationError("POLYLINE_SHAPE", "vertices must be an (n, 2) array")
        object.__setattr__(self, "vertices", v)
        if self.kind not in ("support", "tangent"):
            raise ValidationError("POLYLINE_KIND", f"unknown kind {self.kind!r}")
        if self.topology not in ("open", "closed"):
            raise ValidationError("POLYLINE_TOPOLOGY", f"unknown topology {self.topology!r}")
        n = len(v)
        minimum = 4 if self.topology == "closed" else 3
        if n < minimum:
            raise ValidationError(
                "POLYLINE_TOO_SHORT",
                f"{self.topology} polyline needs at least {minimum} vertices, got {n}",
            )
        edges = self.edge_vectors()
        lengths = np.linalg.norm(edges, axis=1)
        if np.any(lengths < 1e-12 * max(1.0, lengths.max())):
            raise ValidationError("POLYLINE_DEGENERATE_EDGE", "consecutive vertices coincide")

    def edge_vectors(self) -> np.ndarray:
        v = self.vertices
        if self.topology == "closed":
            return np.diff(np.vstack([v, v[:1]]), axis=0)
        return np.diff(v, axis=0)

    def n_edges(self) -> int:
        return len(self.vertices) if self.topology == "closed" else len(self.vertices) - 1

    def is_convex(self) -> bool:
        """Strict convexity of the closed polygon (any orientation)."""
        e = self.edge_vectors()
        nxt = np.roll(e, -1, axis=0)
        cross = e[:, 0] * nxt[:, 1] - e[:, 1] * nxt[:, 0]
        return bool(np.all(cross > 0) or np.all(cross < 0))


@dataclass(frozen=True)
class FairingConfig:
    max_iterations: int = 150
    gradient_tol: float = 1e-10
    functional: str = "variation"   # variation (d kappa/ds)^2 | bending energy kappa^2

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.gradient_tol <= 0:
            raise ValueError("gradient_tol must be positive")
        if self.functional not in ("variation", "energy"):
            raise ValueError("functional must be 'variation' or 'energy'")


@dataclass
class FairedCurve:
    """Fairing result: the curve plus the data needed to sample Hermite tables."""

    curve: NurbsCurve
    functional_value: float
    initial_functional: float
    iterations: int
    node_params: np.ndarray
    contact_sigmas: np.ndarray | None = None

    @property
    def degree(self) -> int:
        return self.curve.degree


def _canonical_frame(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic rigid frame (rotation, centroid) attached to the vertices.

    Fairing runs inside this frame, which makes the whole pipeline equivariant
    under rigid motions of the input.  The frame axis points from the centroid
    to the first vertex well clear of it.
    """
    centroid = vertices.mean(axis=0)
    rel = vertices - centroid
    scale = np.abs(rel).max()
    axis = None
    for r in rel:
        if np.hypot(r[0], r[1]) > 1e-9 * scale:
            axis = r / np.hypot(r[0], r[1])
            break
    if axis is None:
        return np.eye(2), centroid
    rot = np.array([[axis[0], axis[1]], [-axis[1], axis[0]]])
    return rot, centroid


def _canonical_vertices(vertices: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Frame-local vertices, quantized so rigid motions reproduce them bitwise.

    Rotating the input perturbs the frame-local coordinates at the last few
    ulps; the optimizer would amplify that along its softest directions far
    past the 1e-9 reproducibility budget.  Snapping to a 2^-34 relative grid
    (about 6e-11, well below every interpolation tolerance) makes the local
    problem bit-identical for rigidly moved inputs.
    """
    rot, centroid = _canonical_frame(vertices)
    local = (vertices - centroid) @ rot.T
    scale = max(np.abs(local).max(), 1e-300)
    # power-of-two quantum: the grid itself must not depend on scale's ulps
    quantum = math.ldexp(1.0, math.frexp(scale)[1] - 34)
    return np.round(local / quantum) * quantum, rot, centroid


def _collinear(vertices: np.ndarray) -> bool:
    d = vertices[-1] - vertices[0]
    scale = np.linalg.norm(d)
    if scale == 0:
        return False
    rel = vertices - vertices[0]
    cross = rel[:, 0] * d[1] - rel[:, 1] * d[0]
    return bool(np.all(np.abs(cross) <= 1e-12 * scale * scale))


def _turning_angles(vertices: np.ndarray, closed: bool) -> np.ndarray:
    """Unsigned exterior angle at each vertex (0 at open ends)."""
    n = len(vertices)
    angles = np.zeros(n)
    rng = range(n) if closed else range(1, n - 1)
    for i in rng:
        a = vertices[i] - vertices[(i - 1) % n]
        b = vertices[(i + 1) % n] - vertices[i]
        angles[i] = abs(math.atan2(a[0] * b[1] - a[1] * b[0], a[0] * b[0] + a[1] * b[1]))
    return angles


def _sub_breakpoints(node_params: np.ndarray, span_turns: np.ndarray) -> np.ndarray:
    """Each span gets ceil(turn / 0.1) uniform sub-spans, between 2 and 12."""
    pieces = [np.array([node_params[0]])]
    for j in range(len(node_params) - 1):
        k = int(np.clip(math.ceil(span_turns[j] / 0.1), 2, 12))
        pieces.append(np.linspace(node_params[j], node_params[j + 1], k + 1)[1:])
    return np.concatenate(pieces)


def vcurve_from_support(poly: Polyline, cfg: FairingConfig = FairingConfig()) -> FairedCurve:
    """Fair degree-6 interpolant through every vertex of a support polyline."""
    if poly.kind != "support":
        raise ValidationError("POLYLINE_KIND", "vcurve_from_support needs a support polyline")
    v = poly.vertices
    closed = poly.topology == "closed"

    if not closed and _collinear(v):
        chords = np.linalg.norm(np.diff(v, axis=0), axis=1)
        curve = line_curve(v[0], v[-1], degree=FAIRING_DEGREE)
        params = np.concatenate([[0.0], np.cumsum(chords)])
        return FairedCurve(curve, 0.0, 0.0, 0, params)
    if closed and _collinear(v):
        raise ValidationError("POLYLINE_DEGENERATE", "closed polyline is collinear")

    local_verts, rot, centroid = _canonical_vertices(v)
    local = _support_local(Polyline(local_verts, poly.kind, poly.topology), cfg)
    return FairedCurve(
        local.curve.transformed(matrix=rot.T, translation=centroid),
        local.functional_value,
        local.initial_functional,
        local.iterations,
        local.node_params,
    )


def _support_local(poly: Polyline, cfg: FairingConfig) -> FairedCurve:
    v = poly.vertices
    closed = poly.topology == "closed"
    edges = poly.edge_vectors()
    chords = np.linalg.norm(edges, axis=1)
    params = np.concatenate([[0.0], np.cumsum(chords)])
    angles = _turning_angles(v, closed)
    n_spans = poly.n_edges()
    if closed:
        span_turns = np.array([0.5 * (angles[j] + angles[(j + 1) % len(v)]) for j in range(n_spans)])
    else:
        span_turns = np.array([0.5 * (angles[j] + angles[j + 1]) for j in range(n_spans)])

    breakpoints = _sub_breakpoints(params, span_turns)
    space = SplineSpace(FAIRING_DEGREE, breakpoints, closed=closed)
    node_ts = params[:-1] if closed else params
    result = solve_fair_curve(
        space,
        node_ts,
        v,
        functional=cfg.functional,
        max_iterations=cfg.max_iterations,
        gradient_tol=cfg.gradient_tol,
    )
    return FairedCurve(
        space.curve(result.coeffs),
        result.functional_value,
        result.initial_functional,
        result.iterations,
        node_ts,
    )


def vcurve_from_tangent(poly: Polyline, cfg: FairingConfig = FairingConfig()) -> FairedCurve:
    """Fair curve touching the interior of every edge of a tangent polyline.

    The contact point on each edge is an additional unknown of the same
    minimization; the curve meets each edge exactly once and shares its
    direction there.  Closed tangent polygons must be convex.
    """
    if poly.kind != "tangent":
        raise ValidationError("POLYLINE_KIND", "vcurve_from_tangent needs a tangent polyline")
    closed = poly.topology == "closed"
    if closed and not poly.is_convex():
        raise ValidationError("TANGENT_NOT_CONVEX", "closed tangent polygon must be convex")

    local_verts, rot, centroid = _canonical_vertices(poly.vertices)
    local = _tangent_local(Polyline(local_verts, poly.kind, poly.topology), cfg)
    return FairedCurve(
        local.curve.transformed(matrix=rot.T, translation=centroid),
        local.functional_value,
        local.initial_functional,
        local.iterations,
        local.node_params,
        contact_sigmas=local.contact_sigmas,
    )


def _tangent_local(poly: Polyline, cfg: FairingConfig) -> FairedCurve:
    closed = poly.topology == "closed"
    v = poly.vertices
    edges = poly.edge_vectors()
    n_edges = poly.n_edges()
    lengths = np.linalg.norm(edges, axis=1)
    directions = edges / lengths[:, None]
    edge_starts = v if closed else v[:-1]

    if closed:
        turns = _turning_angles(v, True)
        span_turns = np.array([turns[(j + 1) % len(v)] for j in range(n_edges)])
    else:
        span_turns = np.array([
            abs(math.atan2(
                directions[j, 0] * directions[j + 1, 1] - directions[j, 1] * directions[j + 1, 0],
                directions[j] @ directions[j + 1],
            ))
            for j in range(n_edges - 1)
        ])

    def solve_once(contact_ts, total):
        if closed:
            node_grid = np.concatenate([[0.0], contact_ts, [total]])
            grid = np.unique(node_grid)
            per_span = np.full(len(grid) - 1, span_turns.max() if span_turns.size else 0.3)
            breakpoints = _sub_breakpoints(grid, per_span)
        else:
            breakpoints = _sub_breakpoints(contact_ts, span_turns)
        space = SplineSpace(FAIRING_DEGREE, breakpoints, closed=closed)
        result = solve_fair_curve(
            space,
            contact_ts,
            moving_targets=(edge_starts, edges),
            dir_ts=contact_ts,
            dir_vecs=directions,
            dir_mode="hard",
            functional=cfg.functional,
            max_iterations=cfg.max_iterations,
            gradient_tol=cfg.gradient_tol,
        )
        return space, result

    # first pass: contacts at the running-midpoint parameters of each edge
    mids = np.cumsum(lengths) - 0.5 * lengths
    contact_ts = mids if closed else mids - mids[0]
    total = float(np.sum(lengths)) if closed else float(contact_ts[-1])
    space, result = solve_once(contact_ts, total)

    # second pass: re-space the contact parameters by measured arc length, so
    # the uniform-speed representative is compatible with the contact sites
    curve = space.curve(result.coeffs)
    lo, hi = curve.domain
    s_contacts = np.array([curve.arc_length(lo, t) for t in contact_ts])
    s_total = curve.arc_length(lo, hi)
    if closed:
        contact_ts = s_contacts
        space, result = solve_once(contact_ts, s_total)
    else:
        contact_ts = s_contacts - s_contacts[0]
        space, result = solve_once(contact_ts, float(contact_ts[-1]))

    return FairedCurve(
        space.curve(result.coeffs),
        result.functional_value,
        result.initial_functional,
        result.iterations,
        contact_ts,
        contact_sigmas=result.sigmas,
    )


def hermite_of(faired: FairedCurve, at: str | int = "nodes") -> HermiteTable:
    """Hermite table of a faired curve.

    ``at='nodes'`` samples the interpolation nodes (support) or contact points
    (tangent); an integer samples that many uniform arc-length stations.
    """
    curve = faired.curve
    if at == "nodes":
        ts = np.asarray(faired.node_params, dtype=float)
        if curve.closed and ts[-1] < curve.domain[1] - 1e-12:
            pass  # closed tables keep one record per node, no wrap duplicate
    else:
        n = int(at)
        if n < 2:
            raise ValueError("need at least 2 stations")
        from .quality import _ArcLengthMap

        lo, hi = curve.domain
        arc = _ArcLengthMap(curve)
        stations = np.linspace(0.0, arc.total, n)
        ts = np.empty(n)
        ts[0], ts[-1] = lo, hi
        for i in range(1, n - 1):
            ts[i] = arc.t_of(stations[i])
    floor = 1e-9 / max(curve.bbox_diagonal(), 1e-9)
    return sample_hermite(curve, ts, zero_curvature_tol=floor)
