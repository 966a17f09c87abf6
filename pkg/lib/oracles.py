"""Exact (up to floating point) reference computations.

These are brute-force or LP based and only meant for small instances: tests,
`selftest` and `bench` compare the approximate operations against them.
"""
import logging
from enum import Enum
from fractions import Fraction
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from lib.errors import (
    DimensionMismatchError,
    InfeasibleError,
    InvalidParameterError,
    NotFullDimensionalError,
    SizeCapError,
    UnboundedError,
)
from lib.fattening import fatten_transform, sandwich_box
from lib.geometry import HalfspacePolytope, PointPolytope, as_direction, as_vector, cube_facet_net, support_many


logger = logging.getLogger(__name__)

PAIRWISE_CAP = 10 ** 6
LP_POINT_CAP = 10 ** 4
FEASIBILITY_TOLERANCE = 1e-9
RATIONAL_MAX_DIM = 3
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}


class ExactVerdict(str, Enum):
    INTERSECTING = "Intersecting"
    DISJOINT = "Disjoint"
    AMBIGUOUS = "ambiguous"


class SeparationResult(NamedTuple):
    verdict: ExactVerdict
    separation: float
    tolerance: float


def _check_pair(A: PointPolytope, B: PointPolytope):
    if A.dim != B.dim:
        raise DimensionMismatchError(f"Polytopes of dimension {A.dim} and {B.dim}")


def _solve_exact(rows: List[List[Fraction]], rhs: List[Fraction]) -> Optional[List[Fraction]]:
    """One solution of rows . x = rhs in rationals (free variables at zero), None if inconsistent"""
    m, k = len(rows), len(rows[0])
    M = [row[:] + [value] for row, value in zip(rows, rhs)]
    pivots = []
    r = 0
    for c in range(k):
        pivot = next((i for i in range(r, m) if M[i][c] != 0), None)
        if pivot is None:
            continue
        M[r], M[pivot] = M[pivot], M[r]
        for i in range(m):
            if i != r and M[i][c] != 0:
                factor = M[i][c] / M[r][c]
                M[i] = [x - factor * y for x, y in zip(M[i], M[r])]
        pivots.append(c)
        r += 1
        if r == m:
            break
    if any(M[i][k] != 0 for i in range(r, m)):
        return None
    x = [Fraction(0)] * k
    for i, c in enumerate(pivots):
        x[c] = M[i][k] / M[i][c]
    return x


def rational_verdict(A: PointPolytope, B: PointPolytope, lam: np.ndarray, mu: np.ndarray) -> ExactVerdict:
    """Exact recheck of a float LP solution with convex weights lam (on A) and mu (on B).

    Intersecting if the weight supports carry an exact common point with
    nonnegative weights; disjoint if the float closest-point direction
    separates the point sets exactly. Ambiguous otherwise.
    """
    ia = np.flatnonzero(lam > 1e-12)
    ib = np.flatnonzero(mu > 1e-12)
    if 0 < len(ia) + len(ib) <= A.dim + 2:
        columns = [[Fraction(x) for x in A.points[i]] + [Fraction(1), Fraction(0)] for i in ia]
        columns += [[-Fraction(x) for x in B.points[j]] + [Fraction(0), Fraction(1)] for j in ib]
        rows = [list(row) for row in zip(*columns)]
        solution = _solve_exact(rows, [Fraction(0)] * A.dim + [Fraction(1), Fraction(1)])
        if solution is not None and all(x >= 0 for x in solution):
            return ExactVerdict.INTERSECTING
    u = mu @ B.points - lam @ A.points
    if np.any(u != 0.0):
        exact_u = [Fraction(x) for x in u]
        top_a = max(sum(c * Fraction(x) for c, x in zip(exact_u, p)) for p in A.points)
        bottom_b = min(sum(c * Fraction(x) for c, x in zip(exact_u, p)) for p in B.points)
        if top_a < bottom_b:
            return ExactVerdict.DISJOINT
    return ExactVerdict.AMBIGUOUS


def lp_separation(A: PointPolytope, B: PointPolytope) -> SeparationResult:
    """Smallest L-infinity distance between conv A and conv B, relative to the joint extent.

    Solves min s over convex weights lam, mu with |sum lam_i a_i - sum mu_j b_j|_k <= s.
    """
    _check_pair(A, B)
    if len(A) > LP_POINT_CAP or len(B) > LP_POINT_CAP:
        raise SizeCapError(f"LP oracle takes at most {LP_POINT_CAP} points per polytope")
    joint = np.vstack([A.points, B.points])
    origin = joint.min(axis=0)
    scale = float(np.max(np.ptp(joint, axis=0))) or 1.0
    a = (A.points - origin) / scale
    b = (B.points - origin) / scale
    na, nb, d = a.shape[0], b.shape[0], A.dim

    # variables: lam (na), mu (nb), s
    diff = np.hstack([a.T, -b.T])
    A_ub = np.vstack([
        np.hstack([diff, -np.ones((d, 1))]),
        np.hstack([-diff, -np.ones((d, 1))]),
    ])
    b_ub = np.zeros(2 * d)
    A_eq = np.zeros((2, na + nb + 1))
    A_eq[0, :na] = 1.0
    A_eq[1, na:na + nb] = 1.0
    cost = np.zeros(na + nb + 1)
    cost[-1] = 1.0
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=np.ones(2),
                     bounds=[(0, None)] * (na + nb + 1), method="highs", options=HIGHS_OPTIONS)
    if result.status != 0:
        raise InfeasibleError(f"Separation LP failed: {result.message}")
    separation = max(0.0, float(result.x[-1]))
    tol = FEASIBILITY_TOLERANCE
    if separation <= 0.1 * tol:
        verdict = ExactVerdict.INTERSECTING
    elif separation > tol:
        verdict = ExactVerdict.DISJOINT
    elif d <= RATIONAL_MAX_DIM:
        verdict = rational_verdict(A, B, result.x[:na], result.x[na:na + nb])
        logger.info("lp oracle: separation %.3g rechecked in rationals: %s", separation, verdict.value)
    else:
        verdict = ExactVerdict.AMBIGUOUS
    if verdict == ExactVerdict.AMBIGUOUS:
        logger.warning("lp oracle: separation %.3g inside the tolerance band", separation)
    return SeparationResult(verdict, separation * scale, tol * scale)


def lp_intersect_exact(A: PointPolytope, B: PointPolytope) -> ExactVerdict:
    return lp_separation(A, B).verdict


def pairwise_minkowski_exact(A: PointPolytope, B: PointPolytope, cap: int = PAIRWISE_CAP) -> PointPolytope:
    """All pairwise sums a_i + b_j; their hull is conv A + conv B"""
    _check_pair(A, B)
    if len(A) * len(B) > cap:
        raise SizeCapError(f"{len(A)} x {len(B)} pairwise sums exceed the cap of {cap}")
    sums = A.points[:, None, :] + B.points[None, :, :]
    return PointPolytope(sums.reshape(-1, A.dim))


def origin_in_hull(P: PointPolytope) -> bool:
    """O in conv P, by LP feasibility"""
    n = len(P)
    result = linprog(np.zeros(n), A_eq=np.vstack([P.points.T, np.ones((1, n))]),
                     b_eq=np.append(np.zeros(P.dim), 1.0), bounds=[(0, None)] * n,
                     method="highs", options=HIGHS_OPTIONS)
    return result.status == 0


def dense_width_oracle(S: PointPolytope, delta: float) -> float:
    """Minimum width over a delta-net of directions taken in the fattened frame of S"""
    if not 0.0 < delta <= 0.1:
        raise InvalidParameterError(f"delta must lie in (0, 0.1], got {delta}")
    T = fatten_transform(sandwich_box(S))
    directions = T.pullback(cube_facet_net(S.dim, delta))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    hi, _ = support_many(S.points, directions)
    lo, _ = support_many(S.points, -directions)
    return float(np.min(hi + lo))


def halfspace_support_exact(H: HalfspacePolytope, v: np.ndarray) -> Tuple[float, np.ndarray]:
    """max v . x over the halfspace polytope, with a maximizer"""
    v = as_direction(v, H.dim)
    result = linprog(-v, A_ub=H.normals, b_ub=H.offsets, bounds=[(None, None)] * H.dim,
                     method="highs", options=HIGHS_OPTIONS)
    if result.status == 4:
        # presolve could not tell empty from unbounded; a feasibility solve settles it
        result.status = 3 if _feasible(H) else 2
    if result.status == 2:
        raise InfeasibleError("Halfspace polytope is empty")
    if result.status == 3:
        raise UnboundedError(f"Halfspace polytope is unbounded along {v.tolist()}")
    if result.status != 0:
        raise InfeasibleError(f"Support LP failed: {result.message}")
    return float(-result.fun), np.asarray(result.x)


def _feasible(H: HalfspacePolytope) -> bool:
    result = linprog(np.zeros(H.dim), A_ub=H.normals, b_ub=H.offsets, bounds=[(None, None)] * H.dim,
                     method="highs", options=HIGHS_OPTIONS)
    return result.status == 0


def check_bounded(H: HalfspacePolytope):
    """Raises UnboundedError unless the polytope is bounded along every axis direction"""
    for axis in np.vstack([np.eye(H.dim), -np.eye(H.dim)]):
        halfspace_support_exact(H, axis)


def chebyshev_center(H: HalfspacePolytope, tol: float = 1e-9) -> Tuple[np.ndarray, float]:
    """Center and radius of a largest ball inside the halfspace polytope"""
    norms = np.linalg.norm(H.normals, axis=1)
    cost = np.zeros(H.dim + 1)
    cost[-1] = -1.0
    result = linprog(cost, A_ub=np.hstack([H.normals, norms[:, None]]), b_ub=H.offsets,
                     bounds=[(None, None)] * H.dim + [(0, None)], method="highs", options=HIGHS_OPTIONS)
    if result.status == 4:
        result.status = 3 if _feasible(H) else 2
    if result.status == 2:
        raise InfeasibleError("Halfspace polytope is empty")
    if result.status == 3:
        raise UnboundedError("Halfspace polytope contains arbitrarily large balls")
    if result.status != 0:
        raise InfeasibleError(f"Chebyshev LP failed: {result.message}")
    center, radius = np.asarray(result.x[:-1]), float(result.x[-1])
    scale = max(1.0, float(np.max(np.abs(H.offsets / norms))))
    if radius <= tol * scale:
        raise NotFullDimensionalError("Halfspace polytope has empty interior")
    return center, radius


def hull_vertices(points: np.ndarray) -> np.ndarray:
    try:
        return points[np.sort(ConvexHull(points).vertices)]
    except (QhullError, ValueError):
        return points


def halfspace_vertices(H: HalfspacePolytope) -> np.ndarray:
    """Vertices of a bounded, full-dimensional halfspace polytope (qhull around the Chebyshev center)"""
    center, _ = chebyshev_center(H)
    # qhull wants rows (normal, -offset) for normal . x - offset <= 0
    stacked = np.hstack([H.normals, -H.offsets[:, None]])
    try:
        points = HalfspaceIntersection(stacked, center).intersections
    except QhullError as exc:
        raise NotFullDimensionalError(f"qhull could not intersect the halfspaces: {exc}") from exc
    if not np.all(np.isfinite(points)):
        raise UnboundedError("Halfspace polytope has vertices at infinity")
    return hull_vertices(points)


def hull_distance_exact(P: PointPolytope, w: np.ndarray) -> float:
    """Euclidean distance from w to conv P (0 inside)"""
    w = as_vector(w, P.dim)
    V = hull_vertices(P.points)
    if origin_in_hull(PointPolytope(V - w)):
        return 0.0
    n = V.shape[0]

    def objective(lam):
        r = lam @ V - w
        return float(r @ r), 2.0 * (V @ r)

    start = np.full(n, 1.0 / n)
    result = minimize(objective, start, jac=True, method="SLSQP", bounds=[(0.0, 1.0)] * n,
                      constraints=[{"type": "eq", "fun": lambda lam: lam.sum() - 1.0,
                                    "jac": lambda lam: np.ones(n)}],
                      options={"ftol": 1e-14, "maxiter": 500})
    lam = np.clip(result.x, 0.0, None)
    lam /= lam.sum()
    return float(np.linalg.norm(lam @ V - w))


def envelope_min_exact(points: np.ndarray, alpha: float) -> Tuple[float, np.ndarray]:
    """min over r in [-alpha, alpha]^(d-1) of max_p (p' . r - p_d): the upper envelope of the duals"""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n, d = points.shape
    cost = np.zeros(d)
    cost[-1] = 1.0
    # p' . r - t <= p_d
    A_ub = np.hstack([points[:, :-1], -np.ones((n, 1))])
    result = linprog(cost, A_ub=A_ub, b_ub=points[:, -1],
                     bounds=[(-alpha, alpha)] * (d - 1) + [(None, None)], method="highs", options=HIGHS_OPTIONS)
    if result.status != 0:
        raise InfeasibleError(f"Envelope LP failed: {result.message}")
    return float(result.fun), np.asarray(result.x[:-1])


def exact_support(P: PointPolytope, directions: np.ndarray) -> np.ndarray:
    values, _ = support_many(P.points, np.atleast_2d(directions))
    return values


def halfspace_widths(H: HalfspacePolytope, directions: np.ndarray) -> np.ndarray:
    """Directional widths of a bounded halfspace polytope (two LPs per direction)"""
    widths = []
    for v in np.atleast_2d(directions):
        hi, _ = halfspace_support_exact(H, v)
        lo, _ = halfspace_support_exact(H, -v)
        widths.append((hi + lo) / float(np.linalg.norm(v)))
    return np.array(widths)


def point_widths(P: PointPolytope, directions: np.ndarray) -> np.ndarray:
    directions = np.atleast_2d(directions)
    hi, _ = support_many(P.points, directions)
    lo, _ = support_many(P.points, -directions)
    return (hi + lo) / np.linalg.norm(directions, axis=1)
