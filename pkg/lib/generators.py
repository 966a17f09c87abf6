"""Deterministic instance generators.

Every generator draws from `numpy.random.default_rng(seed)`, so an InstanceSpec
always produces the same points. Pairs carry a certificate: a common witness
point for intersecting pairs, or a separating direction with the gap it leaves.
"""
import math
import logging
import itertools
from dataclasses import dataclass
from typing import Callable, Dict, Literal, Optional, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from lib.errors import InvalidParameterError
from lib.geometry import PointPolytope, random_rotation, support_many, width_exact
from lib.oracles import origin_in_hull


logger = logging.getLogger(__name__)

InstanceKind = Literal["sphere-shell", "rotated-box", "simplex", "random-hull", "near-touching-pair"]


class InstanceSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: InstanceKind
    d: int = Field(default=2, ge=2, le=8)
    n: int = Field(default=100, ge=1)
    seed: int = Field(default=0, ge=0)
    margin: float = Field(default=2.0, description="Pair gap in units of eps times the larger width; <= 0 overlaps")
    eps: float = Field(default=0.1, gt=0, lt=1)


@dataclass(frozen=True, eq=False)
class Certificate:
    status: Literal["intersecting", "separated"]
    witness: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    gap: Optional[float] = None
    margin: Optional[float] = None

    def holds(self, A: PointPolytope, B: PointPolytope, tol: float = 1e-9) -> bool:
        """Re-check the certificate with exact support scans"""
        if self.status == "separated":
            hi_a, _ = support_many(A.points, self.direction[None, :])
            lo_b, _ = support_many(B.points, -self.direction[None, :])
            return float(-lo_b[0] - hi_a[0]) >= self.gap * (1.0 - tol) - tol
        return _in_hull_by_weights(A, self.witness) and _in_hull_by_weights(B, self.witness)


def _in_hull_by_weights(P: PointPolytope, x: np.ndarray) -> bool:
    return origin_in_hull(PointPolytope(P.points - x))


@dataclass(frozen=True, eq=False)
class Instance:
    spec: InstanceSpec
    polytope: PointPolytope
    width: Optional[float] = None


@dataclass(frozen=True, eq=False)
class PairInstance:
    spec: InstanceSpec
    A: PointPolytope
    B: PointPolytope
    certificate: Certificate


def _unit_rows(x: np.ndarray) -> np.ndarray:
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sphere_shell_points(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    return _unit_rows(rng.normal(size=(n, d)))


def ball_points(d: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform in the unit ball"""
    radii = rng.uniform(size=n) ** (1.0 / d)
    return sphere_shell_points(d, n, rng) * radii[:, None]


def regular_simplex(d: int) -> np.ndarray:
    """d + 1 vertices with unit edge length, centered at the origin"""
    vertices = np.eye(d + 1) - 1.0 / (d + 1)
    _, _, vt = np.linalg.svd(vertices)
    coords = vertices @ vt[:d].T
    return coords / math.sqrt(2.0)


def simplex_width(d: int, edge: float = 1.0) -> float:
    """Width of the regular d-simplex"""
    if d % 2:
        return edge * math.sqrt(2.0 / (d + 1))
    return edge * math.sqrt(2.0 * (d + 1) / (d * (d + 2)))


def _sphere_shell(spec: InstanceSpec, rng: np.random.Generator) -> Instance:
    return Instance(spec, PointPolytope(sphere_shell_points(spec.d, spec.n, rng)))


def _rotated_box(spec: InstanceSpec, rng: np.random.Generator) -> Instance:
    half = np.sort(rng.uniform(0.2, 1.0, size=spec.d))
    corners = np.array(list(itertools.product((-1.0, 1.0), repeat=spec.d))) * half
    extra = max(0, spec.n - corners.shape[0])
    interior = rng.uniform(-1.0, 1.0, size=(extra, spec.d)) * half
    rotation = random_rotation(spec.d, rng)
    points = np.vstack([corners, interior]) @ rotation.T + rng.normal(size=spec.d)
    return Instance(spec, PointPolytope(points), 2.0 * float(half[0]))


def _simplex(spec: InstanceSpec, rng: np.random.Generator) -> Instance:
    edge = float(rng.uniform(0.5, 2.0))
    vertices = regular_simplex(spec.d) * edge
    extra = max(0, spec.n - vertices.shape[0])
    weights = rng.dirichlet(np.ones(spec.d + 1), size=extra)
    points = np.vstack([vertices, weights @ vertices]) @ random_rotation(spec.d, rng).T
    return Instance(spec, PointPolytope(points + rng.normal(size=spec.d)), simplex_width(spec.d, edge))


def _random_hull(spec: InstanceSpec, rng: np.random.Generator) -> Instance:
    if spec.n < spec.d + 1:
        raise InvalidParameterError(f"A random hull in dimension {spec.d} needs at least {spec.d + 1} points")
    return Instance(spec, PointPolytope(ball_points(spec.d, spec.n, rng)))


def near_touching_pair(spec: InstanceSpec) -> PairInstance:
    """Two random hulls placed `margin` eps-widths apart, or overlapping when margin <= 0"""
    if spec.n < spec.d + 1:
        raise InvalidParameterError(f"Pairs in dimension {spec.d} need at least {spec.d + 1} points each")
    rng = np.random.default_rng(spec.seed)
    a = ball_points(spec.d, spec.n, rng)
    b = ball_points(spec.d, spec.n, rng) * rng.uniform(0.5, 1.5)
    if spec.margin <= 0:
        # equal point means put the common mean inside both hulls
        b = b - b.mean(axis=0) + a.mean(axis=0)
        A, B = PointPolytope(a), PointPolytope(b)
        return PairInstance(spec, A, B, Certificate("intersecting", witness=a.mean(axis=0)))

    u = _unit_rows(rng.normal(size=(1, spec.d)))[0]
    A, B0 = PointPolytope(a), PointPolytope(b)
    gap = spec.margin * spec.eps * max(width_exact(A, u), width_exact(B0, u))
    shift = float(np.max(a @ u)) - float(np.min(b @ u)) + gap
    B = PointPolytope(b + shift * u)
    return PairInstance(spec, A, B, Certificate("separated", direction=u, gap=gap, margin=spec.margin))


SINGLE_GENERATORS: Dict[str, Callable[[InstanceSpec, np.random.Generator], Instance]] = {
    "sphere-shell": _sphere_shell,
    "rotated-box": _rotated_box,
    "simplex": _simplex,
    "random-hull": _random_hull,
}


def generate(spec: InstanceSpec) -> Union[Instance, PairInstance]:
    if spec.kind == "near-touching-pair":
        pair = near_touching_pair(spec)
        logger.debug("generated pair %s: %s", spec, pair.certificate.status)
        return pair
    instance = SINGLE_GENERATORS[spec.kind](spec, np.random.default_rng(spec.seed))
    logger.debug("generated %s with %d points", spec.kind, len(instance.polytope))
    return instance
