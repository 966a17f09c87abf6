"""Approximate intersection detection between independently preprocessed polytopes.

A = mapA(conv S_A) and B = mapB(conv S_B) intersect iff the origin lies in
K = A + (-B). Membership of the origin is decided by a pipeline run on the
state machine: combine the sandwiching bodies of the summands, normalize K so
that it lies between two concentric balls, dispose of the trivial cases and
otherwise minimize the upper envelope of the dual hyperplanes of K over the
abscissae r in [-alpha, alpha]^(d-1).

Summands are "terms": a width index under an affine map (optionally reflected
through the origin) or an analytic ball. Only support bounds are ever asked of
a term, so -B is never materialized.
"""
import math
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache, reduce
from typing import List, Optional, Sequence, Tuple, TypedDict, Union

import numpy as np

from lib.config import Settings, resolve
from lib.convex_min import MinResult, NoisyObjective, minimize_nd
from lib.errors import DimensionMismatchError, InvalidParameterError
from lib.fattening import (
    SymmetricBody,
    fattened_radii,
    minkowski_body,
    negate_body,
    sandwich_box,
    translate_body,
    whitening,
)
from lib.geometry import AffineMap, HalfspacePolytope, PointPolytope, as_direction, as_vector
from lib.state_machine import EntryPoint, Resource, Run, StateMachine, Step, Termination
from lib.width_index import WidthIndex, build, query_support, query_support_many


logger = logging.getLogger(__name__)


class Verdict(str, Enum):
    INTERSECTING = "Intersecting"
    DISJOINT = "Disjoint"


@dataclass(frozen=True, eq=False)
class IndexTerm:
    """map(conv S) accessed through its width index, reflected through O when negate is set"""
    idx: WidthIndex
    map: Optional[AffineMap] = None
    negate: bool = False

    def __post_init__(self):
        if self.map is not None and self.map.dim != self.idx.dim:
            raise DimensionMismatchError(f"Map of dimension {self.map.dim} for a {self.idx.dim}-index")

    @property
    def dim(self) -> int:
        return self.idx.dim

    @property
    def slack(self) -> float:
        return self.idx.eps / (1.0 - self.idx.eps)

    def body(self) -> Optional[SymmetricBody]:
        body = self.idx.body if self.map is None else self.idx.body.mapped(self.map)
        return negate_body(body) if self.negate else body

    def offset(self) -> np.ndarray:
        return np.zeros(self.dim)

    def support_bounds(self, u: np.ndarray) -> Tuple[float, float]:
        """(low, high) with low <= h(u) <= high"""
        direction = -u if self.negate else u
        hi = query_support(self.idx, direction, self.map).value
        lo = query_support(self.idx, -direction, self.map).value
        return hi, hi + self.slack * (hi + lo)

    def support_points(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Kernel support values and witnesses for a batch of directions"""
        if self.negate:
            values, witnesses = query_support_many(self.idx, -directions, self.map)
            return values, -witnesses
        return query_support_many(self.idx, directions, self.map)


@dataclass(frozen=True, eq=False)
class BallTerm:
    """Closed ball; radius 0 is a single point"""
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not (math.isfinite(self.radius) and self.radius >= 0):
            raise InvalidParameterError(f"Ball radius must be finite and >= 0, got {self.radius}")
        center = as_vector(self.center)
        center.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def slack(self) -> float:
        return 0.0

    def body(self) -> Optional[SymmetricBody]:
        if self.radius == 0.0:
            return None
        d = self.dim
        return SymmetricBody(self.center, np.eye(d) * (self.radius / math.sqrt(d)), math.sqrt(d))

    def offset(self) -> np.ndarray:
        return self.center if self.radius == 0.0 else np.zeros(self.dim)

    def support_bounds(self, u: np.ndarray) -> Tuple[float, float]:
        h = float(self.center @ u + self.radius * np.linalg.norm(u))
        return h, h

    def support_points(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        norms = np.linalg.norm(directions, axis=1)
        values = directions @ self.center + self.radius * norms
        if self.radius == 0.0:
            return values, np.broadcast_to(self.center, directions.shape).copy()
        return values, self.center + self.radius * directions / norms[:, None]


Term = Union[IndexTerm, BallTerm]


class TermSum:
    """Minkowski sum of terms"""

    def __init__(self, terms: Sequence[Term]):
        self.terms: List[Term] = list(terms)
        if not self.terms:
            raise InvalidParameterError("At least one term is required")
        dims = {t.dim for t in self.terms}
        if len(dims) != 1:
            raise DimensionMismatchError(f"Terms of mixed dimensions {sorted(dims)}")

    def __repr__(self) -> str:
        return f"TermSum({self.terms})"

    @property
    def dim(self) -> int:
        return self.terms[0].dim

    def body(self) -> SymmetricBody:
        bodies = [b for b in (t.body() for t in self.terms) if b is not None]
        if not bodies:
            raise InvalidParameterError("The sum has no full-dimensional term")
        shift = sum(t.offset() for t in self.terms)
        return translate_body(reduce(minkowski_body, bodies), shift)

    def support_bounds(self, u: np.ndarray) -> Tuple[float, float]:
        lo = hi = 0.0
        for term in self.terms:
            a, b = term.support_bounds(u)
            lo += a
            hi += b
        return lo, hi

    def upper_support(self, u: np.ndarray) -> float:
        return self.support_bounds(u)[1]

    def upper_support_many(self, directions: np.ndarray) -> np.ndarray:
        """Certified upper bounds of h_K for a batch of directions"""
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        total = np.zeros(directions.shape[0])
        for term in self.terms:
            hi, _ = term.support_points(directions)
            lo, _ = term.support_points(-directions)
            total += hi + term.slack * (hi + lo)
        return total

    def support_points(self, directions: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        directions = np.atleast_2d(np.asarray(directions, dtype=float))
        values = np.zeros(directions.shape[0])
        points = np.zeros_like(directions)
        for term in self.terms:
            v, p = term.support_points(directions)
            values += v
            points += p
        return values, points


@dataclass(frozen=True, eq=False)
class CanonicalFrame:
    """Linear frame in which K lies between balls of radii r and lam * r about (0, ..., 0, beta)"""
    transform: AffineMap
    r: float
    lam: float
    delta: float
    beta: float
    alpha: float

    def as_dict(self) -> dict:
        return {"r": self.r, "lambda": self.lam, "beta": self.beta, "alpha": self.alpha}


@dataclass(frozen=True, eq=False)
class ApproxAnswer:
    verdict: Verdict
    envelope_min: Optional[float] = None
    evaluations: int = 0
    frame: Optional[CanonicalFrame] = None
    argmin: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    trivial: bool = False
    run: Optional[Run] = field(default=None, repr=False)

    @property
    def intersecting(self) -> bool:
        return self.verdict is Verdict.INTERSECTING


class MembershipState(TypedDict, total=False):
    eps: float
    body: SymmetricBody
    linear: np.ndarray
    lam: float
    r: float
    center_image: np.ndarray
    beta: float
    frame: CanonicalFrame
    minimum: MinResult
    verdict: Verdict
    trivial: bool
    direction: Optional[np.ndarray]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def householder(u: np.ndarray) -> np.ndarray:
    """Orthogonal reflection H with H u = e_d for a unit vector u"""
    d = u.shape[0]
    w = u - np.eye(d)[-1]
    norm = float(w @ w)
    if norm <= 1e-30:
        return np.eye(d)
    return np.eye(d) - 2.0 * np.outer(w, w) / norm


def _combine_bodies(state: MembershipState, resource: Resource) -> MembershipState:
    return {"body": resource.vars["terms"].body()}


def _normalize_frame(state: MembershipState) -> MembershipState:
    body = state["body"]
    inner, outer = fattened_radii(body)
    lam = outer / inner
    linear = whitening(body) / lam
    center_image = linear @ body.center
    return {
        "linear": linear,
        "lam": lam,
        "r": 1.0 / lam,
        "center_image": center_image,
        "beta": float(np.linalg.norm(center_image)),
    }


def _trivial_check(state: MembershipState, resource: Resource) -> MembershipState:
    settings: Settings = resource.vars["settings"]
    r, beta = state["r"], state["beta"]
    if beta <= r:
        logger.debug("origin inside the inner ball (beta=%.4g, r=%.4g)", beta, r)
        return {"verdict": Verdict.INTERSECTING, "trivial": True, "direction": None}
    if beta > 1.0:
        # the outer ball comes from a sampled certificate, so confirm with a certified support bound
        toward_origin = state["linear"].T @ (-state["center_image"] / beta)
        value = resource.vars["terms"].upper_support(toward_origin)
        if value < -state["eps"] * r / settings.verdict_theta:
            logger.debug("origin outside the outer ball (beta=%.4g, support=%.4g)", beta, value)
            return {"verdict": Verdict.DISJOINT, "trivial": True, "direction": _unit(toward_origin)}
    return {"trivial": False}


def _rotate(state: MembershipState) -> MembershipState:
    rotation = householder(state["center_image"] / state["beta"])
    r, lam, beta = state["r"], state["lam"], state["beta"]
    frame = CanonicalFrame(
        transform=AffineMap.linear(rotation @ state["linear"]),
        r=r,
        lam=lam,
        delta=2.0 * lam * r,
        beta=beta,
        alpha=beta / r + 1.0,
    )
    return {"frame": frame}


def _envelope_min(state: MembershipState, resource: Resource) -> MembershipState:
    settings: Settings = resource.vars["settings"]
    terms: TermSum = resource.vars["terms"]
    frame = state["frame"]
    matrix = frame.transform.matrix
    d = terms.dim
    eps = state["eps"]

    def envelope(x: np.ndarray) -> float:
        # h_{MK}(v) = h_K(M^T v) on v = (x, -1)
        return terms.upper_support(matrix.T @ np.append(x, -1.0))

    objective = NoisyObjective(envelope, eps_eval=eps * frame.r / settings.verdict_theta,
                               slope_bound=settings.slope_bound)
    search_eps = eps * frame.r / (4.0 * settings.verdict_theta * (d - 1))
    minimum = minimize_nd(objective, -frame.alpha, frame.alpha, d - 1, search_eps)
    logger.debug("envelope minimum %.6g after %d evaluations", minimum.value, minimum.evaluations)
    return {"minimum": minimum}


def _verdict(state: MembershipState, resource: Resource) -> MembershipState:
    settings: Settings = resource.vars["settings"]
    frame, minimum = state["frame"], state["minimum"]
    if minimum.value >= -state["eps"] * frame.r / settings.verdict_theta:
        return {"verdict": Verdict.INTERSECTING, "direction": None}
    normal = frame.transform.matrix.T @ np.append(minimum.argmin, -1.0)
    return {"verdict": Verdict.DISJOINT, "direction": _unit(normal)}


@lru_cache(maxsize=1)
def membership_machine() -> StateMachine[MembershipState]:
    machine = StateMachine[MembershipState](MembershipState)
    entry = EntryPoint[MembershipState]()
    combine = Step[MembershipState]("combine_bodies", _combine_bodies)
    normalize = Step[MembershipState]("normalize_frame", _normalize_frame)
    trivial = Step[MembershipState]("trivial_check", _trivial_check)
    rotate = Step[MembershipState]("rotate", _rotate)
    envelope = Step[MembershipState]("envelope_min", _envelope_min)
    verdict = Step[MembershipState]("verdict", _verdict)
    termination = Termination[MembershipState]()
    machine.add_steps([entry, combine, normalize, trivial, rotate, envelope, verdict, termination])

    machine.connect(entry, combine)
    machine.connect(combine, normalize)
    machine.connect(normalize, trivial)

    def after_trivial(state: MembershipState) -> Union[Step[MembershipState], str]:
        return termination if state.get("trivial") else rotate

    machine.connect(trivial, [termination, rotate], after_trivial)
    machine.connect(rotate, envelope)
    machine.connect(envelope, verdict)
    machine.connect(verdict, termination)
    return machine


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")


def membership(terms: Sequence[Term], eps: float, settings: Optional[Settings] = None) -> ApproxAnswer:
    """Approximate membership of the origin in the Minkowski sum of the terms"""
    settings = resolve(settings)
    _check_eps(eps)
    total = TermSum(terms)
    limit = eps / settings.calibration
    for term in total.terms:
        if isinstance(term, IndexTerm) and term.idx.eps > limit * (1.0 + 1e-9):
            raise InvalidParameterError(
                f"Index built at eps={term.idx.eps:g}; queries at eps={eps:g} need eps <= {limit:g}"
            )

    run = membership_machine().run({"eps": float(eps)}, Resource({"terms": total, "settings": settings}))
    state = run.get_final_state()
    minimum = state.get("minimum")
    return ApproxAnswer(
        verdict=state["verdict"],
        envelope_min=None if minimum is None else minimum.value,
        evaluations=0 if minimum is None else minimum.evaluations,
        frame=state.get("frame") or _frame_without_rotation(state),
        argmin=None if minimum is None else minimum.argmin,
        direction=state.get("direction"),
        trivial=bool(state.get("trivial")),
        run=run,
    )


def _frame_without_rotation(state: MembershipState) -> CanonicalFrame:
    r, lam, beta = state["r"], state["lam"], state["beta"]
    return CanonicalFrame(AffineMap.linear(state["linear"]), r, lam, 2.0 * lam * r, beta, beta / r + 1.0)


def membership_origin(idxA: WidthIndex, idxB: WidthIndex, mapA: Optional[AffineMap] = None,
                      mapB: Optional[AffineMap] = None, eps: float = 0.1,
                      settings: Optional[Settings] = None) -> ApproxAnswer:
    """Approximate membership of O in mapA(A) + (-mapB(B))"""
    return membership([IndexTerm(idxA, mapA), IndexTerm(idxB, mapB, negate=True)], eps, settings)


def approx_intersect(idxA: WidthIndex, idxB: WidthIndex, mapA: Optional[AffineMap] = None,
                     mapB: Optional[AffineMap] = None, eps: float = 0.1,
                     settings: Optional[Settings] = None) -> ApproxAnswer:
    """Intersecting whenever mapA(A) and mapB(B) meet; Disjoint whenever their eps-expansions do not"""
    if idxA.dim != idxB.dim:
        raise DimensionMismatchError(f"Indexes of dimension {idxA.dim} and {idxB.dim}")
    answer = membership_origin(idxA, idxB, mapA, mapB, eps, settings)
    logger.info("approx_intersect: %s (evaluations=%d, trivial=%s)",
                answer.verdict.value, answer.evaluations, answer.trivial)
    return answer


def intersect_with_ball(idx: WidthIndex, center: Sequence[float], radius: float, eps: float,
                        idxB: Optional[WidthIndex] = None, mapA: Optional[AffineMap] = None,
                        mapB: Optional[AffineMap] = None, negate_b: bool = False,
                        settings: Optional[Settings] = None) -> ApproxAnswer:
    """Does K meet the ball? K is mapA(A), or mapA(A) + mapB(B) (mapA(A) - mapB(B) with negate_b)"""
    center = as_vector(center, idx.dim)
    terms: List[Term] = [IndexTerm(idx, mapA)]
    if idxB is not None:
        terms.append(IndexTerm(idxB, mapB, negate=negate_b))
    # K meets B(w, rho) iff O lies in K + B(-w, rho)
    terms.append(BallTerm(-center, radius))
    return membership(terms, eps, settings)


def approx_intersect_halfspaces(HA: HalfspacePolytope, HB: HalfspacePolytope,
                                mapA: Optional[AffineMap] = None, mapB: Optional[AffineMap] = None,
                                eps: float = 0.1, settings: Optional[Settings] = None) -> ApproxAnswer:
    """approx_intersect for polytopes given by halfspaces"""
    from lib.minkowski import convert_representation

    settings = resolve(settings)
    _check_eps(eps)
    if HA.dim != HB.dim:
        raise DimensionMismatchError(f"Polytopes of dimension {HA.dim} and {HB.dim}")
    fine = eps / settings.calibration
    indexes = []
    for H in (HA, HB):
        inner = convert_representation(H, fine, settings)
        # the converted hull sits inside H; grow it about its sandwich center
        center = sandwich_box(inner, settings).center
        grown = PointPolytope(center + (1.0 + fine) * (inner.points - center))
        indexes.append(build(grown, fine, settings))
    return approx_intersect(indexes[0], indexes[1], mapA, mapB, eps, settings)


def separating_direction(answer: ApproxAnswer) -> np.ndarray:
    """Unit normal u with h_K(u) < 0 for a Disjoint answer"""
    if answer.direction is None:
        raise InvalidParameterError("Only Disjoint answers carry a separating direction")
    return as_direction(answer.direction)
