"""Command line entry point: `python -m lib.cli <command> [options]`.

Results are written as JSON on stdout (or to --out); logs go to stderr.
A GeometryError exits with status 1 and an {"error", "message"} document.
"""
import sys
import time
import logging
import argparse
from pathlib import Path
from typing import Dict, List, Literal, Optional, Union

from pydantic import BaseModel, ValidationError

from lib.config import configure_logging, get_settings
from lib.errors import DimensionMismatchError, GeometryError, InvalidParameterError, UsageError
from lib.evaluation import bench as run_bench, selftest as run_selftest
from lib.generators import InstanceKind, InstanceSpec, PairInstance, generate
from lib.geometry import HalfspacePolytope, PointPolytope
from lib.intersection import approx_intersect, approx_intersect_halfspaces
from lib.minkowski import approx_width, bronshteyn_ivanov, convert_representation, dudley
from lib.parsers import (
    answer_model,
    index_model,
    kernel_model,
    load_pair,
    load_polytope,
    pair_model,
    polytope_model,
    render_json,
    width_model,
)
from lib.render import svg_render_2d
from lib.schemas import ErrorModel
from lib.tooling import CommandRegistry
from lib.width_index import build as build_index


logger = logging.getLogger(__name__)

registry = CommandRegistry()
command = registry.command

Output = Union[BaseModel, str]
Polytope = Union[PointPolytope, HalfspacePolytope]


class Stopwatch:
    def __init__(self):
        self.laps: Dict[str, float] = {}
        self._last = time.perf_counter()

    def lap(self, name: str):
        now = time.perf_counter()
        self.laps[name] = now - self._last
        self._last = now


def _as_points(P: Polytope, eps: float) -> PointPolytope:
    if isinstance(P, HalfspacePolytope):
        return convert_representation(P, eps)
    return P


def _load_inputs(inputs: List[str], count: Union[int, tuple]) -> List[Polytope]:
    allowed = (count,) if isinstance(count, int) else count
    if len(inputs) not in allowed:
        raise InvalidParameterError(f"Expected {' or '.join(map(str, allowed))} --in files, got {len(inputs)}")
    return [load_polytope(path) for path in inputs]


@command
def gen(kind: InstanceKind, dim: int = 2, n: int = 100, seed: int = 0, margin: float = 2.0,
        eps: float = 0.1) -> Output:
    """Generate a seeded instance (a polytope, or a certified pair)"""
    try:
        spec = InstanceSpec(kind=kind, d=dim, n=n, seed=seed, margin=margin, eps=eps)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise InvalidParameterError(f"{first['loc'][0]}: {first['msg']}") from exc
    instance = generate(spec)
    if isinstance(instance, PairInstance):
        return pair_model(instance)
    return polytope_model(instance.polytope)


@command(flags={"inputs": "--in"})
def build(inputs: List[str], eps: float = 0.1) -> Output:
    """Build the width index of a point polytope"""
    (P,) = _load_inputs(inputs, 1)
    return index_model(build_index(_as_points(P, eps), eps))


@command(flags={"inputs": "--in"})
def kernel(inputs: List[str], eps: float = 0.1) -> Output:
    """Kernel size report of a point polytope"""
    (P,) = _load_inputs(inputs, 1)
    return kernel_model(build_index(_as_points(P, eps), eps))


@command(flags={"inputs": "--in"})
def intersect(inputs: List[str], eps: float = 0.1, timings: bool = False) -> Output:
    """Approximate intersection test of two polytopes (or of the pair stored in one file)"""
    settings = get_settings()
    clock = Stopwatch()
    if len(inputs) == 1:
        pair = load_pair(inputs[0])
        A, B = pair.A.to_polytope(), pair.B.to_polytope()
    else:
        A, B = _load_inputs(inputs, 2)
    clock.lap("load")
    if isinstance(A, HalfspacePolytope) and isinstance(B, HalfspacePolytope):
        answer = approx_intersect_halfspaces(A, B, eps=eps, settings=settings)
        clock.lap("query")
    else:
        fine = eps / settings.calibration
        idxA = build_index(_as_points(A, fine), fine, settings)
        idxB = build_index(_as_points(B, fine), fine, settings)
        clock.lap("build")
        answer = approx_intersect(idxA, idxB, eps=eps, settings=settings)
        clock.lap("query")
    return answer_model(answer, clock.laps if timings else None)


@command(flags={"inputs": "--in", "output_format": "--format"})
def minksum(inputs: List[str], eps: float = 0.1, algo: Literal["dudley", "bi"] = "dudley",
            output_format: Literal["json", "svg"] = "json") -> Output:
    """Approximate Minkowski sum of one or two polytopes.

    With a single halfspace polytope the result is its inner point approximation.
    """
    settings = get_settings()
    polytopes = _load_inputs(inputs, (1, 2))
    if len(polytopes) == 1 and isinstance(polytopes[0], HalfspacePolytope):
        result: Polytope = convert_representation(polytopes[0], eps, settings)
    else:
        fine = eps / settings.calibration
        indexes = [build_index(_as_points(P, fine), fine, settings) for P in polytopes]
        idxB = indexes[1] if len(indexes) == 2 else None
        if algo == "dudley":
            result = dudley(indexes[0], idxB, eps, settings=settings)
        else:
            result = bronshteyn_ivanov(indexes[0], idxB, eps, settings=settings)
    if output_format == "svg":
        if result.dim != 2:
            raise DimensionMismatchError(f"SVG output needs 2-D polytopes, got dimension {result.dim}")
        labels = [Path(path).stem for path in inputs]
        return svg_render_2d(list(zip(polytopes, labels)) + [(result, algo)], title=f"eps = {eps:g}")
    return polytope_model(result)


@command(flags={"inputs": "--in"})
def width(inputs: List[str], eps: float = 0.1, timings: bool = False) -> Output:
    """Approximate width of a point polytope"""
    clock = Stopwatch()
    (P,) = _load_inputs(inputs, 1)
    estimate = approx_width(_as_points(P, eps), eps)
    clock.lap("width")
    return width_model(estimate.width, estimate.direction, clock.laps if timings else None)


@command(name="bench")
def bench_command(dim: int = 2, n: int = 4000, seed: int = 0, eps: Optional[List[float]] = None,
                  timings: bool = False) -> Output:
    """Kernel and Dudley sizes against 1/eps"""
    eps_values = eps or [0.04, 0.01, 0.0025]
    return run_bench(d=dim, n=n, eps_values=eps_values, seed=seed, timings=timings)


@command(name="selftest", flags={"only": "--check"})
def selftest_command(full: bool = False, seed: int = 0, only: Optional[List[str]] = None,
                     timings: bool = False) -> Output:
    """Run the acceptance checks against the exact oracles"""
    return run_selftest(full=full, seed=seed, only=only, timings=timings)


def _write(output: Output, out: Optional[str]):
    text = output if isinstance(output, str) else render_json(output) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--log-level", dest="log_level", default=None,
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--out", dest="out", default=None, help="Write the result here instead of stdout")
    return registry.parser("polyapprox", description="Approximate convex polytope operations",
                           parents=[common])


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        _write(ErrorModel(error=type(exc).__name__, message=str(exc)), None)
        return 1
    configure_logging(get_settings(), args.log_level)
    try:
        output = args.command.invoke(args)
    except GeometryError as exc:
        logger.debug("command %s failed", args.command_name, exc_info=True)
        _write(ErrorModel(error=type(exc).__name__, message=str(exc)), None)
        return 1
    _write(output, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
