"""Augmented approximate directional-width index.

`build` fattens the input, scans a direction net of resolution c_net * sqrt(eps)
in the fattened frame and keeps the distinct support witnesses. The kernel is a
subset of the input points and preserves every directional width up to the
factor 1 - eps. The sandwiching body of the original polytope is stored with
the kernel so that sums of (mapped) indexed bodies can be fattened in constant
time.
"""
import math
import logging
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from scipy.spatial import ConvexHull, QhullError, cKDTree

from lib.config import Settings, resolve
from lib.errors import DimensionMismatchError, InvalidParameterError
from lib.fattening import SymmetricBody, fatten_transform, sandwich_box
from lib.geometry import (
    AffineMap,
    PointPolytope,
    as_direction,
    cube_facet_net,
    support_many,
)


logger = logging.getLogger(__name__)

PREFILTER_MAX_DIM = 4


class WidthQuery(NamedTuple):
    p: np.ndarray
    q: np.ndarray
    width: float


class SupportQuery(NamedTuple):
    value: float
    witness: np.ndarray


class SumWidth(NamedTuple):
    width: float
    upper: np.ndarray
    lower: np.ndarray


@dataclass(frozen=True, eq=False)
class DirectionBuckets:
    """Candidate kernel rows per net direction (directions live in the fattened frame)"""
    directions: np.ndarray
    candidates: Tuple[np.ndarray, ...]

    def __post_init__(self):
        object.__setattr__(self, "_tree", cKDTree(self.directions))

    def lookup(self, u: np.ndarray) -> np.ndarray:
        _, i = self._tree.query(u / np.linalg.norm(u))
        return self.candidates[int(i)]


@dataclass(frozen=True, eq=False)
class WidthIndex:
    eps: float
    kernel_indices: np.ndarray
    kernel: np.ndarray
    own_map: AffineMap
    body: SymmetricBody
    resolution: float
    source_size: int
    buckets: Optional[DirectionBuckets] = None

    def __post_init__(self):
        for name in ("kernel_indices", "kernel"):
            array = np.array(getattr(self, name))
            array.setflags(write=False)
            object.__setattr__(self, name, array)

    @property
    def dim(self) -> int:
        return self.kernel.shape[1]

    def __len__(self) -> int:
        return self.kernel.shape[0]

    @property
    def size_constant(self) -> float:
        """|Q| * eps^((d-1)/2), the measured constant in the kernel size bound"""
        return len(self) * self.eps ** ((self.dim - 1) / 2)

    def __repr__(self) -> str:
        return f"WidthIndex(eps={self.eps}, kernel={len(self)}/{self.source_size}, dim={self.dim})"


def _check_eps(eps: float):
    if not 0.0 < eps < 1.0:
        raise InvalidParameterError(f"eps must lie in (0, 1), got {eps}")


def _hull_candidates(points: np.ndarray, settings: Settings) -> np.ndarray:
    n, d = points.shape
    if not settings.hull_prefilter or d > PREFILTER_MAX_DIM or n <= 8 * (d + 1):
        return np.arange(n)
    try:
        return np.sort(ConvexHull(points).vertices)
    except (QhullError, ValueError) as exc:
        logger.debug("hull prefilter skipped: %s", exc)
        return np.arange(n)


def _make_buckets(net: np.ndarray, witness_rows: np.ndarray, resolution: float) -> DirectionBuckets:
    tree = cKDTree(net)
    neighbours = tree.query_ball_point(net, r=2.0 * resolution)
    candidates = tuple(np.unique(witness_rows[np.asarray(group, dtype=int)]) for group in neighbours)
    return DirectionBuckets(net, candidates)


def build(S: PointPolytope, eps: float, settings: Optional[Settings] = None) -> WidthIndex:
    settings = resolve(settings)
    _check_eps(eps)
    body = sandwich_box(S, settings)
    own_map = fatten_transform(body)

    candidates = _hull_candidates(S.points, settings)
    fattened = own_map.apply(S.points[candidates])
    resolution = settings.net_constant * math.sqrt(eps)
    net = cube_facet_net(S.dim, resolution)
    _, rows = support_many(fattened, net)
    witnesses = candidates[rows]
    kernel_indices = np.unique(witnesses)

    buckets = None
    if settings.use_buckets:
        witness_rows = np.searchsorted(kernel_indices, witnesses)
        buckets = _make_buckets(net, witness_rows, resolution)

    logger.info("built width index: n=%d d=%d eps=%g kernel=%d net=%d",
                len(S), S.dim, eps, kernel_indices.shape[0], net.shape[0])
    return WidthIndex(
        eps=float(eps),
        kernel_indices=kernel_indices,
        kernel=S.points[kernel_indices],
        own_map=own_map,
        body=body,
        resolution=resolution,
        source_size=len(S),
        buckets=buckets,
    )


def restore(S: PointPolytope, eps: float, kernel_indices: List[int], body: SymmetricBody,
            own_map: AffineMap, settings: Optional[Settings] = None) -> WidthIndex:
    """Rebuild an index from its serialized parts and the source polytope"""
    settings = resolve(settings)
    _check_eps(eps)
    kernel_indices = np.asarray(kernel_indices, dtype=int)
    if kernel_indices.size == 0 or kernel_indices.min() < 0 or kernel_indices.max() >= len(S):
        raise InvalidParameterError("Kernel indices do not refer to the given polytope")
    resolution = settings.net_constant * math.sqrt(eps)
    buckets = None
    if settings.use_buckets:
        net = cube_facet_net(S.dim, resolution)
        _, rows = support_many(own_map.apply(S.points[kernel_indices]), net)
        buckets = _make_buckets(net, rows, resolution)
    return WidthIndex(float(eps), kernel_indices, S.points[kernel_indices], own_map, body,
                      resolution, len(S), buckets)


def _pulled(idx: WidthIndex, v: np.ndarray, map: Optional[AffineMap]) -> np.ndarray:
    v = as_direction(v, idx.dim)
    if map is None:
        return v
    if map.dim != idx.dim:
        raise DimensionMismatchError("Map and index dimensions differ")
    return map.pullback(v)


def _extreme_rows(idx: WidthIndex, direction: np.ndarray) -> Tuple[int, int, float, float]:
    """Rows of the kernel maximizing and minimizing direction . q, lowest row on ties"""
    if idx.buckets is None:
        scores = idx.kernel @ direction
        i, j = int(np.argmax(scores)), int(np.argmin(scores))
        return i, j, float(scores[i]), float(scores[j])
    fat = np.linalg.solve(idx.own_map.matrix.T, direction)
    best = []
    for u in (fat, -fat):
        rows = idx.buckets.lookup(u)
        scores = idx.kernel[rows] @ direction
        best.append(int(rows[np.argmax(scores) if u is fat else np.argmin(scores)]))
    i, j = best
    return i, j, float(idx.kernel[i] @ direction), float(idx.kernel[j] @ direction)


def _image(point: np.ndarray, map: Optional[AffineMap]) -> np.ndarray:
    return point.copy() if map is None else map.apply(point)


def query_width(idx: WidthIndex, v: np.ndarray, map: Optional[AffineMap] = None) -> WidthQuery:
    """Points p, q of map(S) with width_v({p, q}) >= (1 - eps) width_v(map(S))"""
    direction = _pulled(idx, v, map)
    i, j, hi, lo = _extreme_rows(idx, direction)
    width = (hi - lo) / float(np.linalg.norm(v))
    return WidthQuery(_image(idx.kernel[i], map), _image(idx.kernel[j], map), width)


def query_support(idx: WidthIndex, v: np.ndarray, map: Optional[AffineMap] = None) -> SupportQuery:
    """h_Q(v) <= h_S(v) <= h_Q(v) + eps * width_v(S), all under map"""
    direction = _pulled(idx, v, map)
    i, _, hi, _ = _extreme_rows(idx, direction)
    offset = 0.0 if map is None else float(map.translation @ np.asarray(v, dtype=float))
    return SupportQuery(hi + offset, _image(idx.kernel[i], map))


def query_support_many(idx: WidthIndex, directions: np.ndarray,
                       map: Optional[AffineMap] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Batched query_support without buckets: values (N,) and witnesses (N, d)"""
    directions = np.atleast_2d(np.asarray(directions, dtype=float))
    pulled = directions if map is None else directions @ map.matrix
    values, rows = support_many(idx.kernel, pulled)
    witnesses = idx.kernel[rows]
    if map is not None:
        values = values + directions @ map.translation
        witnesses = map.apply(witnesses)
    return values, witnesses


def sum_width(idxA: WidthIndex, idxB: WidthIndex, v: np.ndarray,
              mapA: Optional[AffineMap] = None, mapB: Optional[AffineMap] = None,
              negate_b: bool = False) -> SumWidth:
    """Approximate width of A' + B' (or A' - B') as the sum of the two query widths"""
    if idxA.dim != idxB.dim:
        raise DimensionMismatchError(f"Indexes of dimension {idxA.dim} and {idxB.dim}")
    a = query_width(idxA, v, mapA)
    b = query_width(idxB, v, mapB)
    if negate_b:
        return SumWidth(a.width + b.width, a.p - b.q, a.q - b.p)
    return SumWidth(a.width + b.width, a.p + b.p, a.q + b.q)
