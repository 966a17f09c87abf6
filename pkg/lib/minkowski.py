"""Approximate Minkowski sums, representation conversion and width.

K = mapA(A) + mapB(B) (or mapA(A) - mapB(B)) is normalized by the frame
F(x) = L (x - c) built from the sandwiching bodies of the summands, so that
F(K) lies in the unit ball about the origin. A sphere net of radius 2 sqrt(d)
surrounds it and every net point w gives a boundary sample: an approximate
nearest point w' of K and an outward normal u.

Dudley's outer approximation keeps the supporting halfspaces with normals u,
the Bronshteyn-Ivanov inner approximation keeps the points w'.
"""
import math
import logging
from dataclasses import dataclass
from typing import Literal, NamedTuple, Optional, Tuple, Union

import numpy as np

from lib.config import Settings, resolve
from lib.errors import InvalidParameterError, NotFullDimensionalError, SearchExhaustedError
from lib.fattening import fatten_transform, fattened_radii, sandwich_box, whitening
from lib.geometry import (
    AffineMap,
    HalfspacePolytope,
    PointPolytope,
    affine_compose,
    affine_inverse,
    as_vector,
    cube_facet_net,
    sample_directions,
)
from lib.intersection import BallTerm, IndexTerm, TermSum, membership
from lib.oracles import chebyshev_center, check_bounded, halfspace_support_exact
from lib.width_index import WidthIndex, build


logger = logging.getLogger(__name__)

BoundaryMethod = Literal["descent", "ball_search"]


@dataclass(frozen=True, eq=False)
class SphereNet:
    points: np.ndarray
    radius: float
    resolution: float

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True, eq=False)
class BoundarySample:
    """Net point w, nearest boundary point w' of K, outward normal u and contact radius"""
    w: np.ndarray
    w_prime: np.ndarray
    u: np.ndarray
    rho: float


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """Boundary samples of many targets at once, all in one frame"""
    targets: np.ndarray
    nearest: np.ndarray
    normals: np.ndarray
    lower: np.ndarray

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def rho(self) -> np.ndarray:
        return np.linalg.norm(self.targets - self.nearest, axis=1)

    def sample(self, i: int) -> BoundarySample:
        return BoundarySample(self.targets[i], self.nearest[i], self.normals[i], float(self.rho[i]))


@dataclass(frozen=True, eq=False)
class SumFrame:
    """F(x) = linear @ (x - center)"""
    linear: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "_inverse", np.linalg.inv(self.linear))

    def to_frame(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.center) @ self.linear.T

    def from_frame(self, y: np.ndarray) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self._inverse.T + self.center

    def halfspaces_from_frame(self, normals: np.ndarray, offsets: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """{n . y <= b} in the frame is {(L^T n) . x <= b + (L^T n) . c}; rows come back unit length"""
        pulled = normals @ self.linear
        shifted = offsets + pulled @ self.center
        norms = np.linalg.norm(pulled, axis=1)
        return pulled / norms[:, None], shifted / norms


class WidthEstimate(NamedTuple):
    width: float
    direction: np.ndarray


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")


def sphere_net(d: int, eps: float, settings: Optional[Settings] = None) -> SphereNet:
    """Points of the sphere of radius 2 sqrt(d), within c_dud sqrt(eps) of every sphere point"""
    settings = resolve(settings)
    _check_eps(eps)
    radius = 2.0 * math.sqrt(d)
    resolution = settings.dudley_constant * math.sqrt(eps)
    return SphereNet(radius * cube_facet_net(d, resolution / radius), radius, resolution)


def sum_terms(idxA: WidthIndex, idxB: Optional[WidthIndex] = None, mapA: Optional[AffineMap] = None,
              mapB: Optional[AffineMap] = None, negate_b: bool = False) -> TermSum:
    terms = [IndexTerm(idxA, mapA)]
    if idxB is not None:
        terms.append(IndexTerm(idxB, mapB, negate=negate_b))
    return TermSum(terms)


def sum_frame(total: TermSum) -> SumFrame:
    body = total.body()
    inner, outer = fattened_radii(body)
    return SumFrame(whitening(body) * (inner / outer), body.center)


def framed(total: TermSum, frame: SumFrame) -> TermSum:
    """The same sum seen through F: linear parts move into the term maps, -L c becomes a point term"""
    linear = AffineMap.linear(frame.linear)
    terms = []
    for term in total.terms:
        if not isinstance(term, IndexTerm):
            raise InvalidParameterError("Only indexed terms can be moved into a frame")
        inner = term.map if term.map is not None else AffineMap.identity(term.dim)
        terms.append(IndexTerm(term.idx, affine_compose(linear, inner), term.negate))
    terms.append(BallTerm(-frame.linear @ frame.center, 0.0))
    return TermSum(terms)


def _check_calibration(total: TermSum, eps: float, settings: Settings):
    limit = eps / settings.calibration
    for term in total.terms:
        if isinstance(term, IndexTerm) and term.idx.eps > limit * (1.0 + 1e-9):
            raise InvalidParameterError(
                f"Index built at eps={term.idx.eps:g}; eps={eps:g} needs indexes at eps <= {limit:g}"
            )


def _rows_dot(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->i", a, b)


def _initial_normals(targets: np.ndarray) -> np.ndarray:
    """targets / |targets|, with the first axis for targets at the frame origin"""
    norms = np.linalg.norm(targets, axis=1, keepdims=True)
    normals = np.zeros_like(targets)
    normals[:, 0] = 1.0
    np.divide(targets, norms, out=normals, where=norms > 0.0)
    return normals


def descend(total: TermSum, targets: np.ndarray, iterations: int, tol: float) -> SampleBatch:
    """Batched Frank-Wolfe search for the points of K nearest to each target.

    K is only touched through support queries. Iterates stay in the hull of the
    kernel sums; for each target the normal u maximizing the separation bound
    u . w - h(u) is kept, and the search stops once that bound is within tol of
    the current distance.
    """
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    n = targets.shape[0]
    normals = _initial_normals(targets)
    _, nearest = total.support_points(normals)
    nearest = nearest.copy()
    lower = np.full(n, -np.inf)
    active = np.arange(n)

    for _ in range(iterations):
        if active.size == 0:
            break
        gap = targets[active] - nearest[active]
        dist = np.linalg.norm(gap, axis=1)
        touching = dist <= 1e-15
        u = np.where(touching[:, None], normals[active], gap / np.maximum(dist, 1e-300)[:, None])
        h, s = total.support_points(u)
        bound = _rows_dot(u, targets[active]) - h
        better = bound > lower[active]
        lower[active[better]] = bound[better]
        normals[active[better]] = u[better]

        step = s - nearest[active]
        gamma = np.clip(_rows_dot(gap, step) / np.maximum(_rows_dot(step, step), 1e-300), 0.0, 1.0)
        nearest[active] += gamma[:, None] * step
        done = touching | (dist - lower[active] <= tol)
        active = active[~done]

    if active.size:
        logger.debug("descent: %d of %d targets hit the iteration cap", active.size, n)
    return SampleBatch(targets, nearest, normals, lower)


def ball_search(total: TermSum, target: np.ndarray, eps: float, settings: Settings) -> Tuple[np.ndarray, np.ndarray, float]:
    """Binary search on the radius of balls about target that meet K.

    K must contain the origin of its frame. Returns (w', u, rho) where u is the
    separating direction of the last disjoint ball and w' = w - rho u.
    """
    tol = eps / 4.0

    def touches(rho: float):
        return membership(total.terms + [BallTerm(-target, rho)], eps, settings)

    lo, hi = 0.0, float(np.linalg.norm(target)) + 1.0
    if not touches(hi).intersecting:
        raise SearchExhaustedError(f"Ball of radius {hi:g} about the target misses K")
    first = touches(0.0)
    if first.intersecting:
        return target.copy(), _initial_normals(target[None, :])[0], 0.0
    normal = first.direction
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        answer = touches(mid)
        if answer.intersecting:
            hi = mid
        else:
            lo, normal = mid, answer.direction
    return target - hi * normal, normal, hi


def boundary_samples(total: TermSum, targets: np.ndarray, eps: float, method: Optional[BoundaryMethod] = None,
                     settings: Optional[Settings] = None) -> SampleBatch:
    """Boundary samples for targets given in the frame of total (K inside the unit ball)"""
    settings = resolve(settings)
    method = method or settings.boundary_method
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if method == "descent":
        return descend(total, targets, settings.descent_iterations, eps / 4.0)
    if method == "ball_search":
        found = [ball_search(total, w, eps, settings) for w in targets]
        nearest = np.array([f[0] for f in found])
        normals = np.array([f[1] for f in found])
        lower = np.array([f[2] for f in found]) - eps / 4.0
        return SampleBatch(targets, nearest, normals, lower)
    raise InvalidParameterError(f"Unknown boundary method {method!r}")


def nearest_boundary_sample(idxA: WidthIndex, idxB: Optional[WidthIndex], w: np.ndarray, eps: float,
                            mapA: Optional[AffineMap] = None, mapB: Optional[AffineMap] = None,
                            negate_b: bool = False, method: Optional[BoundaryMethod] = None,
                            settings: Optional[Settings] = None) -> BoundarySample:
    """Approximate nearest point of K to w (outside K) with the outward normal there"""
    settings = resolve(settings)
    _check_eps(eps)
    total = sum_terms(idxA, idxB, mapA, mapB, negate_b)
    _check_calibration(total, eps, settings)
    w = as_vector(w, total.dim)
    frame = sum_frame(total)
    batch = boundary_samples(framed(total, frame), frame.to_frame(w)[None, :], eps, method, settings)
    if batch.rho[0] <= eps / 4.0 and batch.lower[0] <= 0.0:
        raise InvalidParameterError("The target lies inside the sum")
    w_prime = frame.from_frame(batch.nearest[0])
    normal, _ = frame.halfspaces_from_frame(batch.normals[:1], np.zeros(1))
    return BoundarySample(w, w_prime, normal[0], float(np.linalg.norm(w - w_prime)))


def _unique_rows(rows: np.ndarray) -> np.ndarray:
    """Indices of the first occurrence of each distinct row, in input order"""
    _, first = np.unique(np.round(rows, 12), axis=0, return_index=True)
    return np.sort(first)


def _net_samples(idxA: WidthIndex, idxB: Optional[WidthIndex], eps: float, mapA: Optional[AffineMap],
                 mapB: Optional[AffineMap], negate_b: bool, method: Optional[BoundaryMethod],
                 settings: Settings) -> Tuple[TermSum, SumFrame, SampleBatch]:
    _check_eps(eps)
    total = sum_terms(idxA, idxB, mapA, mapB, negate_b)
    _check_calibration(total, eps, settings)
    frame = sum_frame(total)
    inside = framed(total, frame)
    net = sphere_net(total.dim, eps, settings)
    batch = boundary_samples(inside, net.points, eps, method, settings)
    logger.debug("sampled %d net points (radius %.3g, resolution %.3g)", len(net), net.radius, net.resolution)
    return inside, frame, batch


def dudley(idxA: WidthIndex, idxB: Optional[WidthIndex] = None, eps: float = 0.1,
           mapA: Optional[AffineMap] = None, mapB: Optional[AffineMap] = None, negate_b: bool = False,
           method: Optional[BoundaryMethod] = None, settings: Optional[Settings] = None) -> HalfspacePolytope:
    """Outer approximation of K by supporting halfspaces at the boundary samples"""
    settings = resolve(settings)
    inside, frame, batch = _net_samples(idxA, idxB, eps, mapA, mapB, negate_b, method, settings)
    # certified upper support: kernel support plus the index slack times the kernel width
    offsets = inside.upper_support_many(batch.normals)
    normals, offsets = frame.halfspaces_from_frame(batch.normals, offsets)
    keep = _unique_rows(np.hstack([normals, offsets[:, None]]))
    logger.info("dudley: %d halfspaces from %d samples", keep.size, len(batch))
    return HalfspacePolytope(normals[keep], offsets[keep])


def bronshteyn_ivanov(idxA: WidthIndex, idxB: Optional[WidthIndex] = None, eps: float = 0.1,
                      mapA: Optional[AffineMap] = None, mapB: Optional[AffineMap] = None,
                      negate_b: bool = False, outward: bool = False, method: Optional[BoundaryMethod] = None,
                      settings: Optional[Settings] = None) -> PointPolytope:
    """Inner approximation of K by its boundary samples; outward pushes each sample eps along its normal"""
    settings = resolve(settings)
    _, frame, batch = _net_samples(idxA, idxB, eps, mapA, mapB, negate_b, method, settings)
    points = batch.nearest + eps * batch.normals if outward else batch.nearest
    points = frame.from_frame(points)
    keep = _unique_rows(points)
    logger.info("bronshteyn_ivanov: %d samples from %d net points", keep.size, len(batch))
    return PointPolytope(points[keep])


def _halfspaces_to_points(H: HalfspacePolytope, eps: float, settings: Settings) -> PointPolytope:
    check_bounded(H)
    chebyshev_center(H)
    directions = sample_directions(H.dim, 4 * 3 ** H.dim)
    extremes = np.array([halfspace_support_exact(H, v)[1] for v in directions])
    T = fatten_transform(sandwich_box(PointPolytope(extremes), settings))
    inverse = affine_inverse(T)
    # T(H) = {y : (n M^-1) . y <= b - n . (M^-1 t)}, with the sandwich center at the origin
    normals = H.normals @ inverse.matrix
    offsets = H.offsets - H.normals @ inverse.translation
    if np.any(offsets <= 0.0):
        raise NotFullDimensionalError("Sandwich center is not interior to the halfspace polytope")
    polar = PointPolytope(normals / offsets[:, None])
    outer = dudley(build(polar, eps / settings.calibration, settings), None, eps, settings=settings)
    if np.any(outer.offsets <= 0.0):
        raise NotFullDimensionalError("Polar approximation does not contain the origin")
    return PointPolytope(inverse.apply(outer.normals / outer.offsets[:, None]))


def convert_representation(P: Union[PointPolytope, HalfspacePolytope], eps: float,
                           settings: Optional[Settings] = None) -> Union[HalfspacePolytope, PointPolytope]:
    """Points to an outer halfspace approximation; halfspaces to an inner point approximation via the polar"""
    settings = resolve(settings)
    _check_eps(eps)
    if isinstance(P, PointPolytope):
        return dudley(build(P, eps / settings.calibration, settings), None, eps, settings=settings)
    if isinstance(P, HalfspacePolytope):
        return _halfspaces_to_points(P, eps, settings)
    raise InvalidParameterError(f"Cannot convert {type(P).__name__}")


def approx_width(S: PointPolytope, eps: float, method: Optional[BoundaryMethod] = None,
                 settings: Optional[Settings] = None) -> WidthEstimate:
    """Width of conv S as the distance from O to the boundary of K + (-K)"""
    settings = resolve(settings)
    _check_eps(eps)
    idx = build(S, eps / settings.calibration, settings)
    outer = dudley(idx, idx, eps, negate_b=True, method=method, settings=settings)
    distances = outer.offsets / np.linalg.norm(outer.normals, axis=1)
    i = int(np.argmin(distances))
    logger.info("approx_width: %.6g over %d halfspaces", distances[i], len(outer))
    return WidthEstimate(float(distances[i]), outer.normals[i].copy())
