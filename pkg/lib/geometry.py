"""Exact low-level geometry.

Vectors are plain float64 numpy arrays. The value types below are frozen
dataclasses whose arrays are marked read-only, so they can be shared freely.
"""
import math
import logging
import itertools
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from lib.errors import (
    DimensionMismatchError,
    EmptyPolytopeError,
    InvalidDirectionError,
    InvalidParameterError,
    SingularMapError,
)


logger = logging.getLogger(__name__)

DIM_MIN = 2
DIM_MAX = 8
SINGULAR_TOLERANCE = 1e-12


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


def as_vector(v: Sequence[float], dim: Optional[int] = None) -> np.ndarray:
    vec = np.asarray(v, dtype=float).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatchError(f"Expected a {dim}-vector, got length {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise InvalidParameterError("Coordinates must be finite")
    return vec


def as_direction(v: Sequence[float], dim: Optional[int] = None) -> np.ndarray:
    """Validate a query direction: finite and nonzero"""
    vec = np.asarray(v, dtype=float).reshape(-1)
    if dim is not None and vec.shape[0] != dim:
        raise DimensionMismatchError(f"Expected a {dim}-vector, got length {vec.shape[0]}")
    if not np.all(np.isfinite(vec)):
        raise InvalidDirectionError("Direction must be finite")
    if not np.any(vec):
        raise InvalidDirectionError("Direction must be nonzero")
    return vec


def unit(v: np.ndarray) -> np.ndarray:
    v = as_direction(v)
    return v / np.linalg.norm(v)


def _check_dim(d: int):
    if not DIM_MIN <= d <= DIM_MAX:
        raise InvalidParameterError(f"Dimension must be in [{DIM_MIN}, {DIM_MAX}], got {d}")


@dataclass(frozen=True, eq=False)
class Hyperplane:
    """Halfspace {x : normal . x <= offset}"""
    normal: np.ndarray
    offset: float

    def __post_init__(self):
        normal = as_vector(self.normal)
        if not np.linalg.norm(normal) > 0:
            raise InvalidParameterError("Hyperplane normal must be nonzero")
        if not math.isfinite(self.offset):
            raise InvalidParameterError("Hyperplane offset must be finite")
        object.__setattr__(self, "normal", _frozen(normal))
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.shape[0]

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> bool:
        scale = max(1.0, abs(self.offset), float(np.linalg.norm(self.normal) * np.linalg.norm(x)))
        return float(self.normal @ x) <= self.offset + tol * scale

    def __repr__(self) -> str:
        return f"Hyperplane(normal={self.normal.tolist()}, offset={self.offset})"


@dataclass(frozen=True, eq=False)
class Slab:
    """Region {x : lo <= direction . x <= hi}"""
    direction: np.ndarray
    lo: float
    hi: float

    def __post_init__(self):
        object.__setattr__(self, "direction", _frozen(as_direction(self.direction)))
        if not self.hi >= self.lo:
            raise InvalidParameterError(f"Slab needs lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def center(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def width(self) -> float:
        return (self.hi - self.lo) / float(np.linalg.norm(self.direction))


@dataclass(frozen=True, eq=False)
class AffineMap:
    """x -> matrix @ x + translation, with a non-singular matrix"""
    matrix: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionMismatchError(f"Affine matrix must be square, got shape {matrix.shape}")
        if not np.all(np.isfinite(matrix)):
            raise SingularMapError("Affine matrix must be finite")
        translation = as_vector(self.translation, matrix.shape[0])
        d = matrix.shape[0]
        scale = float(np.max(np.abs(matrix)))
        if scale == 0.0 or abs(np.linalg.det(matrix)) <= SINGULAR_TOLERANCE * scale ** d:
            raise SingularMapError("Affine matrix is singular")
        object.__setattr__(self, "matrix", _frozen(matrix))
        object.__setattr__(self, "translation", _frozen(translation))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def identity(cls, d: int) -> "AffineMap":
        return cls(np.eye(d), np.zeros(d))

    @classmethod
    def linear(cls, matrix: np.ndarray) -> "AffineMap":
        matrix = np.asarray(matrix, dtype=float)
        return cls(matrix, np.zeros(matrix.shape[0]))

    @classmethod
    def shift(cls, translation: np.ndarray) -> "AffineMap":
        translation = as_vector(translation)
        return cls(np.eye(translation.shape[0]), translation)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Map one point (d,) or a batch of points (n, d)"""
        x = np.asarray(x, dtype=float)
        return x @ self.matrix.T + self.translation

    def pullback(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=float) @ self.matrix

    def __repr__(self) -> str:
        return f"AffineMap(matrix={self.matrix.tolist()}, translation={self.translation.tolist()})"


@dataclass(frozen=True, eq=False)
class PointPolytope:
    """Convex hull of n >= 1 points; full-dimensionality is not required here"""
    points: np.ndarray

    def __post_init__(self):
        points = np.asarray(self.points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise EmptyPolytopeError("A point polytope needs at least one point")
        _check_dim(points.shape[1])
        if not np.all(np.isfinite(points)):
            raise InvalidParameterError("Point coordinates must be finite")
        object.__setattr__(self, "points", _frozen(points))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"PointPolytope(n={len(self)}, dim={self.dim})"


@dataclass(frozen=True, eq=False)
class HalfspacePolytope:
    """Intersection of halfspaces normals[i] . x <= offsets[i]"""
    normals: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        normals = np.asarray(self.normals, dtype=float)
        offsets = np.asarray(self.offsets, dtype=float).reshape(-1)
        if normals.ndim != 2 or normals.shape[0] == 0:
            raise EmptyPolytopeError("A halfspace polytope needs at least one halfspace")
        _check_dim(normals.shape[1])
        if offsets.shape[0] != normals.shape[0]:
            raise DimensionMismatchError("One offset per normal is required")
        if not (np.all(np.isfinite(normals)) and np.all(np.isfinite(offsets))):
            raise InvalidParameterError("Halfspace coefficients must be finite")
        if np.any(np.linalg.norm(normals, axis=1) == 0):
            raise InvalidParameterError("Halfspace normals must be nonzero")
        object.__setattr__(self, "normals", _frozen(normals))
        object.__setattr__(self, "offsets", _frozen(offsets))

    @classmethod
    def from_halfspaces(cls, halfspaces: Sequence[Hyperplane]) -> "HalfspacePolytope":
        return cls(
            np.array([h.normal for h in halfspaces]),
            np.array([h.offset for h in halfspaces]),
        )

    @property
    def halfspaces(self) -> List[Hyperplane]:
        return [Hyperplane(n, b) for n, b in zip(self.normals, self.offsets)]

    @property
    def dim(self) -> int:
        return self.normals.shape[1]

    def __len__(self) -> int:
        return self.normals.shape[0]

    def contains(self, x: np.ndarray, tol: float = 1e-9) -> np.ndarray:
        """Point-in-halfspaces test for one point or a batch"""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        lhs = x @ self.normals.T
        scale = np.maximum(1.0, np.abs(self.offsets) + np.linalg.norm(self.normals, axis=1)[None, :]
                           * np.linalg.norm(x, axis=1)[:, None])
        return np.all(lhs <= self.offsets + tol * scale, axis=1)

    def __repr__(self) -> str:
        return f"HalfspacePolytope(m={len(self)}, dim={self.dim})"


def support_index(S: PointPolytope, v: np.ndarray) -> Tuple[float, int]:
    v = as_direction(v, S.dim)
    scores = S.points @ v
    i = int(np.argmax(scores))
    return float(scores[i]), i


def support(S: PointPolytope, v: np.ndarray) -> Tuple[float, np.ndarray]:
    """max of p . v over S with the lowest-index maximizer as witness"""
    h, i = support_index(S, v)
    return h, S.points[i]


def support_many(points: np.ndarray, directions: np.ndarray, chunk: int = 4096) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized support values and lowest-index witnesses for a batch of directions"""
    directions = np.atleast_2d(directions)
    values = np.empty(directions.shape[0])
    indices = np.empty(directions.shape[0], dtype=int)
    for start in range(0, directions.shape[0], chunk):
        block = points @ directions[start:start + chunk].T
        idx = np.argmax(block, axis=0)
        indices[start:start + chunk] = idx
        values[start:start + chunk] = block[idx, np.arange(block.shape[1])]
    return values, indices


def width_exact(S: PointPolytope, v: np.ndarray) -> float:
    v = as_direction(v, S.dim)
    hi, _ = support(S, v)
    lo, _ = support(S, -v)
    return max(0.0, (hi + lo) / float(np.linalg.norm(v)))


def slab(S: PointPolytope, v: np.ndarray) -> Slab:
    v = as_direction(v, S.dim)
    hi, _ = support(S, v)
    lo, _ = support(S, -v)
    return Slab(v, -lo, hi)


def eps_expand(s: Slab, eps: float) -> Slab:
    """Central expansion of a slab by the factor 1 + eps"""
    if not eps >= 0:
        raise InvalidParameterError(f"eps must be non-negative, got {eps}")
    half = 0.5 * (s.hi - s.lo) * (1.0 + eps)
    return Slab(s.direction, s.center - half, s.center + half)


def dual_hyperplane(p: np.ndarray) -> Hyperplane:
    """Dual of p: the graph x_d = p_1 x_1 + ... + p_{d-1} x_{d-1} - p_d.

    Returned as the halfspace above the graph, {x : (p', -1) . x <= p_d}.
    """
    p = as_vector(p)
    return Hyperplane(np.append(p[:-1], -1.0), p[-1])


def dual_point(h: Hyperplane, tol: float = 1e-12) -> np.ndarray:
    """Inverse of dual_hyperplane for non-vertical hyperplanes"""
    u_d = h.normal[-1]
    if abs(u_d) <= tol * float(np.linalg.norm(h.normal)):
        raise InvalidParameterError("Vertical hyperplanes have no dual point")
    slopes = -h.normal[:-1] / u_d
    intercept = h.offset / u_d
    return np.append(slopes, -intercept)


def dual_value(p: np.ndarray, r: np.ndarray) -> float:
    """Height of the dual hyperplane of p above the abscissa r"""
    p = np.asarray(p, dtype=float)
    return float(p[:-1] @ np.asarray(r, dtype=float) - p[-1])


def thickness(p: np.ndarray, q: np.ndarray, r: np.ndarray) -> float:
    """Vertical gap between the duals of p and q at r; equals |v| width_v({p, q}) for v = (r, -1)"""
    return abs(dual_value(p, r) - dual_value(q, r))


def affine_apply(T: AffineMap, S: PointPolytope) -> PointPolytope:
    if T.dim != S.dim:
        raise DimensionMismatchError(f"Map of dimension {T.dim} applied to a {S.dim}-polytope")
    return PointPolytope(T.apply(S.points))


def affine_inverse(T: AffineMap) -> AffineMap:
    inv = np.linalg.inv(T.matrix)
    return AffineMap(inv, -inv @ T.translation)


def affine_compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """outer after inner"""
    if outer.dim != inner.dim:
        raise DimensionMismatchError("Cannot compose maps of different dimension")
    return AffineMap(outer.matrix @ inner.matrix, outer.matrix @ inner.translation + outer.translation)


def pullback_direction(T: AffineMap, v: np.ndarray) -> np.ndarray:
    """M^T v: support of T(S) along v is support of S along M^T v plus t . v"""
    return T.pullback(as_direction(v, T.dim))


def cube_facet_net(d: int, resolution: float) -> np.ndarray:
    """Unit directions from a grid on the facets of [-1, 1]^d.

    Every unit vector is within angle `resolution` of some returned direction.
    Rows are unique and sorted, so the net is deterministic.
    """
    if not resolution > 0:
        raise InvalidParameterError(f"Net resolution must be positive, got {resolution}")
    spacing = 2.0 * resolution / math.sqrt(max(d - 1, 1))
    k = int(math.ceil(2.0 / spacing)) + 1
    grid = np.linspace(-1.0, 1.0, k)
    face = np.array(list(itertools.product(grid, repeat=d - 1)))
    blocks = []
    for axis in range(d):
        for sign in (-1.0, 1.0):
            block = np.insert(face, axis, sign, axis=1)
            blocks.append(block)
    net = np.unique(np.round(np.vstack(blocks), 12), axis=0)
    return net / np.linalg.norm(net, axis=1, keepdims=True)


def sample_directions(d: int, count: int, seed: int = 0) -> np.ndarray:
    """Axes, cube diagonals and seeded Gaussian directions, closed under negation"""
    dirs = [np.eye(d), -np.eye(d)]
    if 2 ** d <= count:
        diagonals = np.array(list(itertools.product((-1.0, 1.0), repeat=d)))
        dirs.append(diagonals / math.sqrt(d))
    fixed = np.vstack(dirs)
    remaining = max(0, count - fixed.shape[0])
    rng = np.random.default_rng(seed)
    extra = rng.normal(size=((remaining + 1) // 2, d))
    extra /= np.linalg.norm(extra, axis=1, keepdims=True)
    return np.vstack([fixed, extra, -extra])


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix via QR"""
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))
