"""Acceptance checks against the exact oracles, and the kernel-size benchmark.

Every check builds its instances from seeded generators and compares an
approximate operation with a brute-force reference. Violations are exact
counts; the observed constants (kernel size constant, Dudley size constant,
width error ratios) are the maxima seen over the run.
"""
import math
import time
import logging
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from lib.config import Settings, resolve
from lib.convex_min import NoisyObjective, evaluation_bound, minimize_nd
from lib.errors import GeometryError
from lib.generators import InstanceSpec, generate, near_touching_pair
from lib.geometry import PointPolytope, sample_directions, thickness
from lib.intersection import Verdict, approx_intersect
from lib.minkowski import approx_width, convert_representation, dudley
from lib.oracles import (
    ExactVerdict,
    dense_width_oracle,
    halfspace_vertices,
    lp_intersect_exact,
    origin_in_hull,
    pairwise_minkowski_exact,
    point_widths,
)
from lib.width_index import build, query_width


logger = logging.getLogger(__name__)


class CheckResult(BaseModel):
    """Outcome of one acceptance check"""
    name: str = Field(description="Check identifier")
    checks: int = Field(default=0, description="Number of individual comparisons made")
    violations: int = Field(default=0, description="Comparisons that broke the contract")
    max_constant: Optional[float] = Field(default=None, description="Largest observed constant")
    seconds: Optional[float] = Field(default=None, description="Wall time of the check, when timings are requested")
    details: Dict[str, Any] = Field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0


class OracleReport(BaseModel):
    """Aggregated selftest result"""
    full: bool
    results: List[CheckResult]
    checks: int = Field(description="Total comparisons over all checks")
    violations: int = Field(description="Total violations over all checks")
    constants: Dict[str, float] = Field(default_factory=dict)
    timings: Optional[Dict[str, float]] = None
    passed: bool


class BenchRow(BaseModel):
    eps: float
    kernel_size: int
    kernel_constant: float
    dudley_size: int
    build_seconds: Optional[float] = None
    dudley_seconds: Optional[float] = None


class BenchReport(BaseModel):
    d: int
    n: int
    seed: int
    rows: List[BenchRow]
    kernel_slope: Optional[float] = Field(default=None, description="log-log slope of |Q| against 1/eps")
    dudley_slope: Optional[float] = Field(default=None, description="log-log slope of Dudley size against 1/eps")


def loglog_slope(eps_values: Sequence[float], sizes: Sequence[float]) -> Optional[float]:
    """Least-squares slope of log(size) against log(1/eps)"""
    if len(eps_values) < 2:
        return None
    x = np.log(1.0 / np.asarray(eps_values, dtype=float))
    y = np.log(np.maximum(np.asarray(sizes, dtype=float), 1.0))
    slope, _ = np.polyfit(x, y, 1)
    return float(slope)


def _abs_noise(x: np.ndarray, eps: float) -> float:
    # deterministic sign pattern that flips between neighbouring evaluations
    return eps * math.cos(997.0 * float(np.sum(x)) + 13.0 * x.size)


class Evaluator:
    """Runs the acceptance checks at reduced scale, or at full scale with full=True"""

    def __init__(self, settings: Optional[Settings] = None, full: bool = False, seed: int = 0,
                 timings: bool = False):
        self.settings = resolve(settings)
        self.full = full
        self.seed = seed
        self.timings = timings

    def _scale(self, reduced: int, full: int) -> int:
        return full if self.full else reduced

    def _timed(self, name: str, check: Callable[[CheckResult], None]) -> CheckResult:
        result = CheckResult(name=name)
        start = time.perf_counter()
        check(result)
        seconds = time.perf_counter() - start
        if self.timings:
            result.seconds = seconds
        level = logging.INFO if result.passed else logging.WARNING
        logger.log(level, "%s: %d checks, %d violations (%.2fs)",
                   name, result.checks, result.violations, seconds)
        return result

    def width_queries(self, result: CheckResult):
        dims = (2, 3, 4) if self.full else (2, 3)
        eps_values = (0.2, 0.05, 0.01) if self.full else (0.2, 0.05)
        instances = self._scale(3, 20)
        n = self._scale(300, 20000)
        directions_count = self._scale(200, 1000)
        worst = 0.0
        for d in dims:
            directions = sample_directions(d, directions_count, seed=self.seed + d)
            for i in range(instances):
                S = generate(InstanceSpec(kind="random-hull", d=d, n=n, seed=self.seed + i)).polytope
                exact = point_widths(S, directions)
                for eps in eps_values:
                    idx = build(S, eps, self.settings)
                    approx = np.array([query_width(idx, v).width for v in directions])
                    result.checks += len(directions)
                    result.violations += int(np.sum(approx < (1.0 - eps) * exact - 1e-12))
                    worst = max(worst, float(np.max(1.0 - approx / exact)) / eps)
                    result.max_constant = max(result.max_constant or 0.0, idx.size_constant)
        result.details["worst_relative_error_over_eps"] = worst

    def kernel_scaling(self, result: CheckResult):
        eps_values = (0.04, 0.01, 0.0025)
        S = generate(InstanceSpec(kind="sphere-shell", d=2, n=self._scale(4000, 20000), seed=self.seed)).polytope
        sizes = [len(build(S, eps, self.settings)) for eps in eps_values]
        slope = loglog_slope(eps_values, sizes)
        result.checks = 1
        result.violations = int(not 0.3 <= slope <= 0.7)
        result.max_constant = max(size * math.sqrt(eps) for size, eps in zip(sizes, eps_values))
        result.details.update(sizes=sizes, slope=slope)

    def exact_identities(self, result: CheckResult):
        rng = np.random.default_rng(self.seed)
        for _ in range(self._scale(100, 1000)):
            d = int(rng.integers(2, 6))
            A = PointPolytope(rng.normal(size=(int(rng.integers(1, 12)), d)))
            B = PointPolytope(rng.normal(size=(int(rng.integers(1, 12)), d)))
            v = rng.normal(size=(1, d))
            total = point_widths(pairwise_minkowski_exact(A, B), v)[0]
            parts = point_widths(A, v)[0] + point_widths(B, v)[0]
            result.violations += int(abs(total - parts) > 1e-9 * max(1.0, abs(parts)))

            p, q, r = rng.normal(size=d), rng.normal(size=d), rng.normal(size=d - 1)
            w = np.append(r, -1.0)
            gap = thickness(p, q, r)
            scaled = float(np.linalg.norm(w)) * point_widths(PointPolytope(np.vstack([p, q])), w[None, :])[0]
            result.violations += int(abs(gap - scaled) > 1e-9 * max(1.0, abs(gap)))
            result.checks += 2

    def convex_minimization(self, result: CheckResult):
        rng = np.random.default_rng(self.seed)
        eps = 0.01
        a, b = -1.0, 1.0
        worst = 0.0
        for k in (1, 2, 3):
            budget = evaluation_bound(a, b, eps) ** k
            for _ in range(self._scale(20 if k < 3 else 5, 200)):
                center = rng.uniform(-0.8, 0.8, size=k)
                slopes = rng.uniform(0.2, 1.0, size=k)
                curvature = float(rng.uniform(0.0, 1.0))

                def f(x: np.ndarray) -> float:
                    return float(slopes @ np.abs(x - center) + curvature * np.sum((x - center) ** 2))

                obj = NoisyObjective(lambda x: f(x) + _abs_noise(x, eps), eps_eval=eps, slope_bound=3.0)
                found = minimize_nd(obj, a, b, k, eps)
                gap = f(found.argmin)
                result.checks += 2
                result.violations += int(gap > 8 * k * eps) + int(found.evaluations > budget)
                worst = max(worst, gap / eps)
        result.max_constant = worst

    def intersection(self, result: CheckResult):
        eps = 0.1
        fine = eps / self.settings.calibration
        mismatches = []
        for d, reduced in ((2, 8), (3, 2)):
            for i in range(self._scale(reduced, 500)):
                margin = 0.0 if i % 2 == 0 else 2.0
                pair = near_touching_pair(InstanceSpec(kind="near-touching-pair", d=d, n=30,
                                                       seed=self.seed + i, margin=margin, eps=eps))
                answer = approx_intersect(build(pair.A, fine, self.settings), build(pair.B, fine, self.settings),
                                          eps=eps, settings=self.settings)
                expected = Verdict.INTERSECTING if pair.certificate.status == "intersecting" else Verdict.DISJOINT
                oracle = lp_intersect_exact(pair.A, pair.B)
                result.checks += 1
                if answer.verdict != expected:
                    result.violations += 1
                    mismatches.append({"d": d, "seed": self.seed + i, "verdict": answer.verdict.value})
                if oracle != ExactVerdict.AMBIGUOUS and oracle.value != expected.value:
                    result.violations += 1
                    mismatches.append({"d": d, "seed": self.seed + i, "oracle": oracle.value})
        result.details["mismatches"] = mismatches

    def minkowski(self, result: CheckResult):
        eps = 0.05
        fine = eps / self.settings.calibration
        worst_ratio = 0.0
        for d, reduced in ((2, 4), (3, 1)):
            directions = sample_directions(d, self._scale(100, 1000), seed=self.seed)
            for i in range(self._scale(reduced, 50)):
                A = generate(InstanceSpec(kind="random-hull", d=d, n=30, seed=self.seed + 2 * i)).polytope
                B = generate(InstanceSpec(kind="random-hull", d=d, n=30, seed=self.seed + 2 * i + 1)).polytope
                outer = dudley(build(A, fine, self.settings), build(B, fine, self.settings), eps,
                               settings=self.settings)
                exact = pairwise_minkowski_exact(A, B)
                outside = ~outer.contains(exact.points, tol=1e-7)
                vertices = PointPolytope(halfspace_vertices(outer))
                ratios = point_widths(vertices, directions) / point_widths(exact, directions)
                result.checks += len(exact) + len(directions)
                result.violations += int(np.sum(outside)) + int(np.sum(ratios > 1.0 + 4.0 * eps))
                worst_ratio = max(worst_ratio, float(np.max(ratios)))
                size_constant = len(outer) * eps ** ((d - 1) / 2)
                result.max_constant = max(result.max_constant or 0.0, size_constant)
        result.details["worst_width_ratio"] = worst_ratio

    def width(self, result: CheckResult):
        eps = 0.05
        worst = 0.0
        for d in (2, 3):
            for kind in ("rotated-box", "simplex", "random-hull"):
                for i in range(self._scale(2, 10)):
                    instance = generate(InstanceSpec(kind=kind, d=d, n=40, seed=self.seed + i))
                    truth = instance.width
                    if truth is None:
                        truth = dense_width_oracle(instance.polytope, 0.05)
                    estimate = approx_width(instance.polytope, eps, settings=self.settings).width
                    error = abs(estimate - truth) / truth
                    result.checks += 1
                    result.violations += int(error > 4.0 * eps)
                    worst = max(worst, error / eps)
        result.max_constant = worst

    def conversion(self, result: CheckResult):
        eps = 0.05
        band = (1.0 + 4.0 * eps) ** 2
        for d in (2, 3) if self.full else (2,):
            directions = sample_directions(d, self._scale(100, 1000), seed=self.seed)
            S = generate(InstanceSpec(kind="random-hull", d=d, n=40, seed=self.seed)).polytope
            back = convert_representation(convert_representation(S, eps, self.settings), eps, self.settings)
            ratios = point_widths(back, directions) / point_widths(S, directions)
            result.checks += len(directions)
            result.violations += int(np.sum((ratios > band) | (ratios < 1.0 / band)))
            result.max_constant = max(result.max_constant or 0.0, float(np.max(np.abs(np.log(ratios)))) / eps)

    def oracle_consistency(self, result: CheckResult):
        for i in range(self._scale(10, 100)):
            pair = near_touching_pair(InstanceSpec(kind="near-touching-pair", d=2 + i % 2, n=8,
                                                   seed=self.seed + i, margin=0.0 if i % 3 == 0 else 1.0))
            verdict = lp_intersect_exact(pair.A, pair.B)
            if verdict == ExactVerdict.AMBIGUOUS:
                continue
            negated = PointPolytope(-pair.B.points)
            via_sum = origin_in_hull(pairwise_minkowski_exact(pair.A, negated))
            result.checks += 1
            result.violations += int(via_sum != (verdict == ExactVerdict.INTERSECTING))

    def checks(self) -> Dict[str, Callable[[CheckResult], None]]:
        return {
            "width_queries": self.width_queries,
            "kernel_scaling": self.kernel_scaling,
            "exact_identities": self.exact_identities,
            "convex_minimization": self.convex_minimization,
            "intersection": self.intersection,
            "minkowski": self.minkowski,
            "width": self.width,
            "conversion": self.conversion,
            "oracle_consistency": self.oracle_consistency,
        }

    def run(self, only: Optional[Sequence[str]] = None) -> OracleReport:
        results = []
        for name, check in self.checks().items():
            if only and name not in only:
                continue
            try:
                results.append(self._timed(name, check))
            except GeometryError as exc:
                logger.error("%s aborted: %s", name, exc)
                results.append(CheckResult(name=name, checks=1, violations=1,
                                           details={"error": type(exc).__name__, "message": str(exc)}))
        violations = sum(r.violations for r in results)
        return OracleReport(
            full=self.full,
            results=results,
            checks=sum(r.checks for r in results),
            violations=violations,
            constants={r.name: r.max_constant for r in results if r.max_constant is not None},
            timings={r.name: r.seconds for r in results} if self.timings else None,
            passed=violations == 0,
        )


def selftest(full: bool = False, seed: int = 0, only: Optional[Sequence[str]] = None,
             settings: Optional[Settings] = None, timings: bool = False) -> OracleReport:
    return Evaluator(settings, full=full, seed=seed, timings=timings).run(only)


def bench(d: int = 2, n: int = 4000, eps_values: Sequence[float] = (0.04, 0.01, 0.0025), seed: int = 0,
          settings: Optional[Settings] = None, timings: bool = False) -> BenchReport:
    """Kernel and Dudley sizes against 1/eps on a sphere shell; wall times only with timings=True"""
    settings = resolve(settings)
    S = generate(InstanceSpec(kind="sphere-shell", d=d, n=n, seed=seed)).polytope
    rows = []
    for eps in sorted(eps_values, reverse=True):
        start = time.perf_counter()
        idx = build(S, eps, settings)
        built = time.perf_counter()
        outer = dudley(build(S, eps / settings.calibration, settings), None, eps, settings=settings)
        done = time.perf_counter()
        rows.append(BenchRow(eps=eps, kernel_size=len(idx), kernel_constant=idx.size_constant,
                             dudley_size=len(outer),
                             build_seconds=built - start if timings else None,
                             dudley_seconds=done - built if timings else None))
    eps_list = [row.eps for row in rows]
    return BenchReport(
        d=d, n=n, seed=seed, rows=rows,
        kernel_slope=loglog_slope(eps_list, [row.kernel_size for row in rows]),
        dudley_slope=loglog_slope(eps_list, [row.dudley_size for row in rows]),
    )
