"""Sandwiching bodies and fattening transforms.

A SymmetricBody is a zonotope c + sum_i [-g_i, g_i] together with a factor
lam such that C is inside K and K is inside the lam-expansion of C about c.
"""
import math
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from lib.config import Settings, resolve
from lib.errors import DimensionMismatchError, InvalidParameterError, NotFullDimensionalError
from lib.geometry import AffineMap, PointPolytope, as_direction, sample_directions, support_many


logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SymmetricBody:
    center: np.ndarray
    generators: np.ndarray
    lam: float

    def __post_init__(self):
        center = np.asarray(self.center, dtype=float).reshape(-1)
        generators = np.atleast_2d(np.asarray(self.generators, dtype=float))
        if generators.shape[1] != center.shape[0]:
            raise DimensionMismatchError("Generators and center must share a dimension")
        if generators.shape[0] < center.shape[0] or np.linalg.matrix_rank(generators) < center.shape[0]:
            raise NotFullDimensionalError("Generators must span the space")
        if not self.lam >= 1.0:
            raise InvalidParameterError(f"Sandwiching factor must be >= 1, got {self.lam}")
        center.setflags(write=False)
        generators.setflags(write=False)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "generators", generators)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def support(self, v: np.ndarray) -> float:
        v = as_direction(v, self.dim)
        return float(self.center @ v + np.abs(self.generators @ v).sum())

    def support_centered(self, directions: np.ndarray) -> np.ndarray:
        """sum_i |g_i . v| for a batch of directions"""
        return np.abs(np.atleast_2d(directions) @ self.generators.T).sum(axis=1)

    def mapped(self, T: AffineMap) -> "SymmetricBody":
        """Image under an affine map; the sandwiching factor is affine invariant"""
        if T.dim != self.dim:
            raise DimensionMismatchError("Map and body dimensions differ")
        return SymmetricBody(T.apply(self.center), self.generators @ T.matrix.T, self.lam)

    def __repr__(self) -> str:
        return f"SymmetricBody(dim={self.dim}, m={self.generators.shape[0]}, lam={self.lam:.4g})"


def _diameter_frame(points: np.ndarray, tol: float) -> np.ndarray:
    """Orthonormal axes from repeated double scans for approximate diameters"""
    d = points.shape[1]
    scale = float(np.max(np.ptp(points, axis=0)))
    residual = points.copy()
    axes = []
    for _ in range(d):
        a = int(np.argmax(np.linalg.norm(residual - residual[0], axis=1)))
        b = int(np.argmax(np.linalg.norm(residual - residual[a], axis=1)))
        direction = residual[b] - residual[a]
        length = float(np.linalg.norm(direction))
        if length <= tol * scale or scale == 0.0:
            raise NotFullDimensionalError("Point set is not full-dimensional")
        u = direction / length
        for axis in axes:
            u = u - (u @ axis) * axis
        u /= np.linalg.norm(u)
        axes.append(u)
        residual = residual - np.outer(residual @ u, u)
    return np.array(axes)


def certificate_ratio(body: SymmetricBody, points: np.ndarray, directions: np.ndarray) -> Tuple[float, float]:
    """Sampled check of C <= K <= lam C about the body center.

    Returns (inner, outer): max of h_C / h_{K-c} and max of h_{K-c} / (lam h_C).
    Both are <= 1 (up to rounding) when the certificate holds on the sample.
    """
    h_k, _ = support_many(points, directions)
    h_k = h_k - directions @ body.center
    h_c = body.support_centered(directions)
    inner = float(np.max(h_c / np.maximum(h_k, 1e-300)))
    outer = float(np.max(h_k / (body.lam * h_c)))
    return inner, outer


def sandwich_box(S: PointPolytope, settings: Optional[Settings] = None) -> SymmetricBody:
    """Hyperrectangle C with C inside conv(S) inside lam C (lam certified on 10 * 3^d directions)"""
    settings = resolve(settings)
    X = S.points
    d = S.dim
    diameter_frame = _diameter_frame(X, settings.tolerance)
    scale = float(np.max(np.ptp(X, axis=0)))

    directions = sample_directions(d, 10 * 3 ** d)
    h_s, witnesses = support_many(X, directions)
    witness_mean = X[np.unique(witnesses)].mean(axis=0)

    best = None
    for frame in (diameter_frame, np.eye(d)):
        proj = X @ frame.T
        lo, hi = proj.min(axis=0), proj.max(axis=0)
        if np.any(hi - lo <= settings.tolerance * scale):
            continue
        for center in (frame.T @ (0.5 * (lo + hi)), witness_mean):
            c = frame @ center
            half = np.maximum(hi - c, c - lo)
            h_outer = np.abs(directions @ frame.T) @ half
            h_centered = h_s - directions @ center
            if np.any(h_centered <= settings.tolerance * scale):
                continue
            lam = max(1.0, float(np.max(h_outer / h_centered))) * settings.sandwich_slack
            if best is None or lam < best[0]:
                best = (lam, center, frame, half)

    if best is None:
        raise NotFullDimensionalError("No interior sandwich center found")
    lam, center, frame, half = best
    body = SymmetricBody(center, frame * (half / lam)[:, None], lam)
    logger.debug("sandwich_box: n=%d d=%d lam=%.4g (target %.4g)", len(S), d, lam, d ** 1.5)
    return body


def minkowski_body(C1: SymmetricBody, C2: SymmetricBody) -> SymmetricBody:
    if C1.dim != C2.dim:
        raise DimensionMismatchError(f"Cannot add bodies of dimension {C1.dim} and {C2.dim}")
    return SymmetricBody(
        C1.center + C2.center,
        np.vstack([C1.generators, C2.generators]),
        max(C1.lam, C2.lam),
    )


def negate_body(C: SymmetricBody) -> SymmetricBody:
    return SymmetricBody(-C.center, C.generators, C.lam)


def translate_body(C: SymmetricBody, t: np.ndarray) -> SymmetricBody:
    return SymmetricBody(C.center + t, C.generators, C.lam)


def whitening(C: SymmetricBody, tol: float = 1e-12) -> np.ndarray:
    """(G^T G)^(-1/2) for the generator matrix G (rows are generators)"""
    gram = C.generators.T @ C.generators
    values, vectors = np.linalg.eigh(gram)
    if values[0] <= tol * values[-1]:
        raise NotFullDimensionalError("Generator matrix is numerically rank deficient")
    return (vectors / np.sqrt(values)) @ vectors.T


def fatten_transform(C: SymmetricBody) -> AffineMap:
    """T(x) = W (x - c) mapping the whitening ellipsoid of C onto the unit ball.

    The ellipsoid sits inside C and C sits inside its sqrt(m) expansion, so
    T(K) lies between balls of radius 1 and lam * sqrt(m) about the origin.
    """
    W = whitening(C)
    return AffineMap(W, -W @ C.center)


def fattened_radii(C: SymmetricBody) -> Tuple[float, float]:
    """Inner and outer ball radii of T(K) for T = fatten_transform(C)"""
    return 1.0, C.lam * math.sqrt(C.generators.shape[0])


def width_ratio(points: np.ndarray, directions: np.ndarray) -> float:
    """min / max directional width over a direction sample (a fatness measure)"""
    hi, _ = support_many(points, directions)
    lo, _ = support_many(points, -directions)
    widths = (hi + lo) / np.linalg.norm(directions, axis=1)
    return float(widths.min() / widths.max())
