"""Minimization of a convex function known only through a noisy evaluator.

`minimize_1d` trisects [a, b], keeps the neighbourhood [x_{m-1}, x_{m+1}] of
the best of the four evaluations and recurses until the interval is shorter than
eps. `minimize_nd` nests the one-dimensional search: the outer search runs on
g'(x_1) = value of the inner (k-1)-dimensional search with x_1 fixed.
"""
import math
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Tuple

import numpy as np

from lib.errors import InvalidParameterError


logger = logging.getLogger(__name__)

SHRINK = 2.0 / 3.0


@dataclass
class NoisyObjective:
    """f_eps with |f_eps(x) - f(x)| <= eps_eval for a convex f of bounded slope"""
    evaluator: Callable[[np.ndarray], float]
    eps_eval: float = 0.0
    slope_bound: float = 10.0
    evaluations: int = field(default=0, init=False)

    def __call__(self, x: np.ndarray) -> float:
        self.evaluations += 1
        return float(self.evaluator(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class MinResult:
    argmin: np.ndarray
    value: float
    evaluations: int


def evaluation_bound(a: float, b: float, eps: float) -> int:
    """Evaluation budget of one trisection search on [a, b]"""
    levels = math.ceil(math.log(max((b - a) / eps, 1.0), 1.0 / SHRINK))
    return 4 * levels + 8


def _check(a: float, b: float, eps: float):
    if not eps > 0:
        raise InvalidParameterError(f"eps must be positive, got {eps}")
    if b < a:
        raise InvalidParameterError(f"Empty interval [{a}, {b}]")


def _trisect(evaluate: Callable[[float], Tuple[float, Any]], a: float, b: float,
             eps: float) -> Tuple[float, float, Any]:
    """Returns (x, f_eps(x), payload); the shallowest evaluation wins ties"""
    trail: List[Tuple[float, float, Any]] = []
    while b - a >= eps:
        step = (b - a) / 3.0
        xs = [a, a + step, a + 2.0 * step, b]
        values = [evaluate(x) for x in xs]
        m = min(range(4), key=lambda i: (values[i][0], i))
        trail.append((xs[m], values[m][0], values[m][1]))
        bounds = [a] + xs + [b]
        a, b = bounds[m], bounds[m + 2]
    value, payload = evaluate(a)
    trail.append((a, value, payload))
    best = min(range(len(trail)), key=lambda i: (trail[i][1], i))
    return trail[best]


def minimize_1d(obj: NoisyObjective, a: float, b: float, eps: float) -> MinResult:
    _check(a, b, eps)
    start = obj.evaluations

    def evaluate(x: float) -> Tuple[float, Any]:
        return obj(np.array([x])), None

    x, value, _ = _trisect(evaluate, a, b, eps)
    return MinResult(np.array([x]), value, obj.evaluations - start)


def minimize_nd(obj: NoisyObjective, a: float, b: float, k: int, eps: float,
                fixed: Optional[np.ndarray] = None) -> MinResult:
    """Minimize over the box [a, b]^k by nested trisection searches"""
    _check(a, b, eps)
    if k < 1:
        raise InvalidParameterError(f"Search dimension must be >= 1, got {k}")
    prefix = np.zeros(0) if fixed is None else np.asarray(fixed, dtype=float)
    start = obj.evaluations

    if k == 1:
        def evaluate(x: float) -> Tuple[float, Any]:
            return obj(np.append(prefix, x)), None
    else:
        def evaluate(x: float) -> Tuple[float, Any]:
            inner = minimize_nd(obj, a, b, k - 1, eps, fixed=np.append(prefix, x))
            return inner.value, inner.argmin

    x, value, payload = _trisect(evaluate, a, b, eps)
    argmin = np.array([x]) if payload is None else np.append(x, payload)
    return MinResult(argmin, value, obj.evaluations - start)
