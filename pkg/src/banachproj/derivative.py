"""Closed-form one-sided directional derivatives of metric projections.

For a convex set C and the projection P onto it, the object computed here
is the right-hand limit

    P'(x; v) = lim_{t -> 0+} (P(x + t v) - P(x)) / t .

Every analytic clause is labeled, and the labels form a small documented
vocabulary so reports can say which branch fired:

ball clauses
    "ball:interior"     x strictly inside: the derivative is v.
    "ball:exterior"     x strictly outside: radial-pullback derivative
                        (r/d²)(d·v - g·‖v‖·(x - c)) with d = ‖x - c‖ and
                        g the norm-smoothness of t ↦ ‖x - c + t v‖.
    "ball:sphere-up"    x on the sphere, v pointing outward or tangent:
                        v - (‖v‖/r)·g·(x - c).
    "ball:sphere-down"  x on the sphere, v pointing inward: v.

positive-cone clauses
    "cone:p{a}z{b}n{c}/clamp{k}"  a, b, c count the positive, zero, and
    negative coordinates of x; k counts zero coordinates whose direction
    component was clamped.  Coordinate i of the value is v_i when x_i > 0,
    or when x_i = 0 with v_i >= 0; it is 0 when x_i < 0, or when x_i = 0
    with v_i < 0.  In dimension 3 the ten sign regions are dispatched as
    explicit branches and cross-checked against the coordinatewise rule.

coordinate-subspace clauses
    "subspace:orthogonal"       v in the annihilator: the derivative is 0.
    "subspace:tangent"          v in the subspace: the derivative is v.
    "subspace:coordinatewise"   mixed v, conjectured closed form (free
                                coordinates kept) confirmed by difference
                                quotients before being returned.
    "subspace:numeric"          mixed v where the quotients converged but
                                contradicted the closed form; the numeric
                                estimate is returned.

region clauses
    "interior"               x in the interior of C: the derivative is v.
    "inverse-image-interior" x interior to the inverse image of a point:
                             the derivative is 0.
    "singleton"              constant projections have derivative 0.
    "numeric"                no closed form: certified quotient estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import sets, solver
from .numdiff import ConvergenceError, StepSchedule, numdiff_derivative
from .space import LpSpace

__all__ = [
    "BoundaryClass",
    "DerivativeResult",
    "TIE_TOL",
    "classify_sphere_direction",
    "ball_derivative",
    "positive_cone_derivative",
    "subspace_derivative",
    "interior_derivative",
    "directional_derivative",
]

#: |norm-smoothness| below this goes to the sampling fallback
TIE_TOL = 1e-9

#: relative half-width of the sphere band in ball case dispatch
SPHERE_BAND = 1e-9

#: tolerance for confirming the subspace closed form against quotients
SUBSPACE_VALIDATE_TOL = 1e-6


@dataclass
class BoundaryClass:
    """Sphere-direction class: tag "up" (locally non-entering) or "down"
    (locally entering), with the first-order growth margin that decided it."""

    tag: str
    margin: float


@dataclass
class DerivativeResult:
    value: np.ndarray
    case_label: str

    def to_json(self) -> dict:
        return {"value": [float(c) for c in self.value], "case_label": self.case_label}


def _as_pair(x, v):
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise ValueError("point and direction must have matching shapes")
    return x, v


def classify_sphere_direction(space: LpSpace, center, radius: float, x, v,
                              tie_tol: float = TIE_TOL) -> BoundaryClass:
    """Sort a direction at a sphere point into "up" or "down".

    "up" means ‖x + t v - c‖ >= r for all small t > 0, "down" means the
    point enters the open ball.  The margin is the one-sided derivative g
    of t ↦ ‖x - c + t v‖ at 0 (up to the positive factor ‖v‖); its sign
    decides all but exact ties.  Ties fall back to sampling the sign of
    ‖x + t_k v - c‖ - r at t_k = 2^-k, k = 10..24: by convexity that sign
    is eventually constant, and an exactly tangent direction stays
    outside, hence "up".
    """
    x, v = _as_pair(x, v)
    c = np.asarray(center, dtype=float)
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    d = space.norm(x - c)
    if abs(d - radius) > SPHERE_BAND * max(1.0, radius):
        raise ValueError("point must lie on the sphere")
    g = space.norm_smoothness(space.unit(x - c), space.unit(v))
    if g > tie_tol:
        return BoundaryClass("up", g)
    if g < -tie_tol:
        return BoundaryClass("down", g)
    scale = max(1.0, radius, space.norm(x - c))
    for k in range(10, 25):
        t = 2.0 ** -k
        val = space.norm(x + t * v - c) - radius
        if abs(val) > 64.0 * np.finfo(float).eps * scale:
            return BoundaryClass("up" if val > 0.0 else "down", g)
    return BoundaryClass("up", g)


def ball_derivative(space: LpSpace, center, radius: float, x, v) -> DerivativeResult:
    """Directional derivative of the ball projection at x along v."""
    x, v = _as_pair(x, v)
    c = np.asarray(center, dtype=float)
    if not (radius > 0.0):
        raise ValueError("radius must be positive")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    d = space.norm(x - c)
    band = SPHERE_BAND * max(1.0, radius)
    if d < radius - band:
        return DerivativeResult(v.copy(), "ball:interior")
    nv = space.norm(v)
    if d > radius + band:
        g = space.norm_smoothness(space.unit(x - c), v / nv)
        value = (radius / d ** 2) * (d * v - g * nv * (x - c))
        return DerivativeResult(value, "ball:exterior")
    cls = classify_sphere_direction(space, c, radius, x, v)
    if cls.tag == "down":
        return DerivativeResult(v.copy(), "ball:sphere-down")
    g = space.norm_smoothness(space.unit(x - c), v / nv)
    value = v - (nv / radius) * g * (x - c)
    return DerivativeResult(value, "ball:sphere-up")


def _cone_label(x: np.ndarray, clamped: int) -> str:
    pos = int(np.sum(x > 0.0))
    zer = int(np.sum(x == 0.0))
    neg = int(np.sum(x < 0.0))
    return f"cone:p{pos}z{zer}n{neg}/clamp{clamped}"


def _cone_coordinatewise(x: np.ndarray, v: np.ndarray) -> DerivativeResult:
    keep = (x > 0.0) | ((x == 0.0) & (v >= 0.0))
    value = np.where(keep, v, 0.0)
    clamped = int(np.sum((x == 0.0) & (v < 0.0)))
    return DerivativeResult(value, _cone_label(x, clamped))


def _cone_table_3d(x: np.ndarray, v: np.ndarray) -> DerivativeResult:
    """Explicit ten-region dispatch for n = 3.

    Written out case by case on purpose: it mirrors the published clause
    table and serves as an independent twin of the coordinatewise rule
    (the test suite checks the two agree on every sign pattern).
    """
    pos = x > 0.0
    zer = x == 0.0
    neg = x < 0.0
    P, Z, N = int(pos.sum()), int(zer.sum()), int(neg.sum())
    out = np.zeros(3)

    if (P, Z, N) == (3, 0, 0):
        # interior: locally the identity
        return DerivativeResult(v.copy(), _cone_label(x, 0))
    if (P, Z, N) == (2, 1, 0):
        # open face: the zero coordinate only follows nonnegative pushes
        k = int(np.argmax(zer))
        out[:] = v
        clamped = 0
        if v[k] < 0.0:
            out[k] = 0.0
            clamped = 1
        return DerivativeResult(out, _cone_label(x, clamped))
    if (P, Z, N) == (1, 2, 0):
        # open edge: each zero coordinate clamps independently
        i = int(np.argmax(pos))
        out[i] = v[i]
        clamped = 0
        for k in np.flatnonzero(zer):
            if v[k] >= 0.0:
                out[k] = v[k]
            else:
                clamped += 1
        return DerivativeResult(out, _cone_label(x, clamped))
    if (P, Z, N) == (0, 3, 0):
        # vertex: the derivative is the clipped direction
        clamped = 0
        for k in range(3):
            if v[k] >= 0.0:
                out[k] = v[k]
            else:
                clamped += 1
        return DerivativeResult(out, _cone_label(x, clamped))
    if (P, Z, N) == (2, 0, 1):
        # outside, nearest point on an open face: negative coordinate inert
        for i in np.flatnonzero(pos):
            out[i] = v[i]
        return DerivativeResult(out, _cone_label(x, 0))
    if (P, Z, N) == (1, 1, 1):
        # outside, nearest point on an edge, one grazing coordinate
        i = int(np.argmax(pos))
        k = int(np.argmax(zer))
        out[i] = v[i]
        clamped = 0
        if v[k] >= 0.0:
            out[k] = v[k]
        else:
            clamped = 1
        return DerivativeResult(out, _cone_label(x, clamped))
    if (P, Z, N) == (1, 0, 2):
        # outside, nearest point on an edge, both negatives inert
        i = int(np.argmax(pos))
        out[i] = v[i]
        return DerivativeResult(out, _cone_label(x, 0))
    if (P, Z, N) == (0, 2, 1):
        # outside, projecting to the vertex, two grazing coordinates
        clamped = 0
        for k in np.flatnonzero(zer):
            if v[k] >= 0.0:
                out[k] = v[k]
            else:
                clamped += 1
        return DerivativeResult(out, _cone_label(x, clamped))
    if (P, Z, N) == (0, 1, 2):
        # outside, projecting to the vertex, one grazing coordinate
        k = int(np.argmax(zer))
        clamped = 0
        if v[k] >= 0.0:
            out[k] = v[k]
        else:
            clamped = 1
        return DerivativeResult(out, _cone_label(x, clamped))
    # (0, 0, 3): interior of the inverse image of the vertex
    return DerivativeResult(out, _cone_label(x, 0))


def positive_cone_derivative(x, v) -> DerivativeResult:
    """Directional derivative of coordinatewise clipping.

    Boundary membership of a coordinate uses exact comparison with 0.0;
    callers control any rounding of their inputs.  Independent of p.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    if x.shape != v.shape:
        raise ValueError("point and direction must have matching shapes")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    if x.size == 3:
        return _cone_table_3d(x, v)
    return _cone_coordinatewise(x, v)


def _validated_coordinatewise(space: LpSpace, free: np.ndarray, x: np.ndarray,
                              v: np.ndarray, schedule: StepSchedule | None) -> DerivativeResult:
    candidate = np.where(free, v, 0.0)
    projector = lambda z: sets.project_coordinate_subspace(free, z)
    est = numdiff_derivative(space, projector, x, v, schedule)
    if not est.converged:
        raise ConvergenceError(
            "quotients for the subspace derivative did not settle",
            trace=list(zip(est.ts, est.quotients)),
        )
    gap = space.norm(est.estimate - candidate)
    if gap <= SUBSPACE_VALIDATE_TOL * max(1.0, space.norm(candidate)):
        return DerivativeResult(candidate, "subspace:coordinatewise")
    return DerivativeResult(est.estimate, "subspace:numeric")


def subspace_derivative(space: LpSpace, free, y, v,
                        schedule: StepSchedule | None = None) -> DerivativeResult:
    """Directional derivative of a coordinate-subspace projection at y in C.

    Directions inside the subspace pass through unchanged; directions in
    the annihilator (supported on masked coordinates) are flattened to 0;
    mixed directions use the coordinatewise closed form, accepted only
    after difference quotients confirm it at this particular (y, v).
    """
    y, v = _as_pair(y, v)
    mask = np.asarray(free, dtype=bool)
    if mask.shape != y.shape:
        raise ValueError("mask and point must have matching shapes")
    if not np.any(v):
        raise ValueError("direction must be nonzero")
    scale = max(1.0, space.norm(y))
    if np.any(np.abs(y[~mask]) > sets.MEMBERSHIP_TOL * scale):
        raise ValueError("base point must belong to the subspace")
    vscale = space.norm(v)
    if np.all(np.abs(v[mask]) <= 1e-15 * vscale):
        return DerivativeResult(np.zeros_like(v), "subspace:orthogonal")
    if np.all(np.abs(v[~mask]) <= 1e-15 * vscale):
        return DerivativeResult(v.copy(), "subspace:tangent")
    return _validated_coordinatewise(space, mask, y, v, schedule)


def interior_derivative(space: LpSpace, C, x, v) -> DerivativeResult:
    """Derivative in the two flat regimes: interior of C, or interior of
    an inverse image.

    Inside the set the projection is locally the identity, so the
    derivative is v; interior to the inverse image of a point (the whole
    space for a singleton target, the open negative orthant for the
    positive cone's vertex) the projection is locally constant, so the
    derivative is 0.  Points in neither regime are refused.
    """
    x, v = _as_pair(x, v)
    if isinstance(C, sets.Singleton):
        return DerivativeResult(np.zeros_like(v), "singleton")
    if isinstance(C, sets.Ball):
        if space.norm(x - C.center) < C.radius - SPHERE_BAND * max(1.0, C.radius):
            return DerivativeResult(v.copy(), "interior")
        raise ValueError("point is not interior to the ball, and ball inverse "
                         "images have empty interior")
    if isinstance(C, sets.PositiveCone):
        if np.all(x > 0.0):
            return DerivativeResult(v.copy(), "interior")
        if np.all(x < 0.0):
            return DerivativeResult(np.zeros_like(v), "inverse-image-interior")
        raise ValueError("point is neither interior to the cone nor interior "
                         "to the inverse image of the vertex")
    if isinstance(C, sets.PolytopeH):
        if np.all(C.normals @ x < C.offsets):
            return DerivativeResult(v.copy(), "interior")
        raise ValueError("point is not strictly interior to the polytope")
    if isinstance(C, sets.CoordinateSubspace):
        raise ValueError("a proper subspace and its inverse images have empty interior")
    raise ValueError(f"no interior rule for {type(C).__name__}")


def directional_derivative(space: LpSpace, C, x, v,
                           schedule: StepSchedule | None = None) -> DerivativeResult:
    """One-sided derivative of the projection onto C, any descriptor.

    Dispatches to the closed-form clauses where they exist.  Descriptors
    without a closed form (segments, rays, polytopes) are differenced
    numerically; for polytopes the schedule is truncated so the iterative
    solver's tolerance cannot pollute the quotients, and the result is
    labeled "numeric".  Non-convergence raises ConvergenceError.
    """
    x, v = _as_pair(x, v)
    if isinstance(C, sets.Ball):
        return ball_derivative(space, C.center, C.radius, x, v)
    if isinstance(C, sets.PositiveCone):
        return positive_cone_derivative(x, v)
    if isinstance(C, sets.CoordinateSubspace):
        mask = C.free
        scale = max(1.0, space.norm(x))
        if np.any(np.abs(x[~mask]) > sets.MEMBERSHIP_TOL * scale):
            # off-set base point: the projection is linear, so the same
            # validated coordinatewise rule applies at any x
            vscale = space.norm(v)
            if np.all(np.abs(v[mask]) <= 1e-15 * vscale):
                return DerivativeResult(np.zeros_like(v), "subspace:orthogonal")
            if np.all(np.abs(v[~mask]) <= 1e-15 * vscale):
                return DerivativeResult(v.copy(), "subspace:tangent")
            return _validated_coordinatewise(space, mask, x, v, schedule)
        return subspace_derivative(space, mask, x, v, schedule)
    if isinstance(C, sets.Singleton):
        return DerivativeResult(np.zeros_like(v), "singleton")
    if isinstance(C, (sets.Segment, sets.Ray)):
        projector = lambda z: solver.project(space, C, z)
        est = numdiff_derivative(space, projector, x, v, schedule)
    elif isinstance(C, (sets.PolytopeH, sets.PolytopeV)):
        sched = schedule if schedule is not None else StepSchedule(quotient_tol=1e-4)
        sched = sched.truncated(1e-8)
        projector = lambda z: solver.project(space, C, z)
        est = numdiff_derivative(space, projector, x, v, sched)
    else:
        raise TypeError(f"unknown set descriptor {type(C).__name__}")
    if not est.converged:
        raise ConvergenceError(
            "projection quotients did not settle within the schedule",
            trace=list(zip(est.ts, est.quotients)),
        )
    return DerivativeResult(est.estimate, "numeric")
