import math

import numpy as np
import pytest
import hypothesis as hyp
import hypothesis.strategies as hys
from hypothesis.extra import numpy as hnp

from lib.errors import InfeasibleError, NotFullDimensionalError, SizeCapError, UnboundedError
from lib.generators import InstanceSpec, near_touching_pair, regular_simplex, simplex_width
from lib.geometry import HalfspacePolytope, PointPolytope
from lib.oracles import (
    ExactVerdict,
    chebyshev_center,
    check_bounded,
    dense_width_oracle,
    envelope_min_exact,
    halfspace_support_exact,
    halfspace_vertices,
    halfspace_widths,
    hull_distance_exact,
    lp_intersect_exact,
    lp_separation,
    origin_in_hull,
    pairwise_minkowski_exact,
    point_widths,
    rational_verdict,
)
from tests.conftest import cube

coords = hys.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False)
point_sets = hys.integers(min_value=1, max_value=8).flatmap(
    lambda n: hnp.arrays(np.float64, (n, 2), elements=coords))
grid_sets = hys.integers(min_value=1, max_value=8).flatmap(
    lambda n: hnp.arrays(np.float64, (n, 2), elements=hys.integers(min_value=-10, max_value=10).map(float)))


def box(lo, hi) -> HalfspacePolytope:
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    d = lo.shape[0]
    return HalfspacePolytope(np.vstack([np.eye(d), -np.eye(d)]), np.concatenate([hi, -lo]))


def test_disjoint_boxes():
    assert lp_intersect_exact(cube(2), cube(2, center=[3.0, 0.0])) == ExactVerdict.DISJOINT


def test_shared_vertex():
    assert lp_intersect_exact(cube(2), cube(2, center=[2.0, 2.0])) == ExactVerdict.INTERSECTING


def test_separation_distance():
    result = lp_separation(cube(2), cube(2, center=[3.0, 0.5]))
    assert result.separation == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("seed", range(6))
def test_certified_pairs_match(seed):
    margin = 0.0 if seed % 2 == 0 else 1.0
    pair = near_touching_pair(InstanceSpec(kind="near-touching-pair", d=2 + seed % 2, n=15, seed=seed,
                                           margin=margin))
    expected = ExactVerdict.INTERSECTING if pair.certificate.status == "intersecting" else ExactVerdict.DISJOINT
    assert lp_intersect_exact(pair.A, pair.B) == expected


@hyp.settings(max_examples=40, deadline=None)
@hyp.given(grid_sets, grid_sets)
def test_separated_sets_exclude_origin_from_difference(a, b):
    A, B = PointPolytope(a), PointPolytope(b)
    result = lp_separation(A, B)
    hyp.assume(result.separation > 1e-6)
    assert result.verdict == ExactVerdict.DISJOINT
    assert not origin_in_hull(pairwise_minkowski_exact(A, PointPolytope(-B.points)))


@hyp.settings(max_examples=40, deadline=None)
@hyp.given(grid_sets, grid_sets)
def test_shared_point_puts_origin_in_difference(a, b):
    A = PointPolytope(a)
    B = PointPolytope(np.vstack([b, 0.5 * (a[0] + a[-1])]))
    assert lp_intersect_exact(A, B) == ExactVerdict.INTERSECTING
    assert origin_in_hull(pairwise_minkowski_exact(A, PointPolytope(-B.points)))


def test_pairwise_sum_of_squares():
    S = pairwise_minkowski_exact(cube(2), cube(2))
    assert len(S) == 16
    for corner in ([2.0, 2.0], [-2.0, 2.0], [2.0, -2.0], [-2.0, -2.0]):
        assert np.any(np.all(S.points == corner, axis=1))


def test_pairwise_sum_with_origin(square):
    S = pairwise_minkowski_exact(square, PointPolytope(np.zeros((1, 2))))
    assert np.array_equal(S.points, square.points)


@hyp.settings(max_examples=50, deadline=None)
@hyp.given(point_sets, point_sets, hnp.arrays(np.float64, 2, elements=coords))
def test_width_additivity(a, b, v):
    hyp.assume(np.linalg.norm(v) > 1e-3)
    A, B = PointPolytope(a), PointPolytope(b)
    total = point_widths(pairwise_minkowski_exact(A, B), v[None, :])[0]
    parts = point_widths(A, v[None, :])[0] + point_widths(B, v[None, :])[0]
    assert total == pytest.approx(parts, rel=1e-9, abs=1e-9)


def test_pairwise_cap():
    with pytest.raises(SizeCapError):
        pairwise_minkowski_exact(cube(2), cube(2), cap=10)


def test_dense_width_oracle_on_known_widths():
    assert dense_width_oracle(cube(2), 0.05) == pytest.approx(2.0, rel=0.01)
    thin = PointPolytope(cube(2).points * np.array([0.5, 0.05]))
    assert dense_width_oracle(thin, 0.05) == pytest.approx(0.1, rel=0.01)
    tri = PointPolytope(regular_simplex(3))
    assert dense_width_oracle(tri, 0.05) == pytest.approx(simplex_width(3), rel=0.1)
    assert dense_width_oracle(tri, 0.05) >= simplex_width(3) - 1e-12


def test_halfspace_support_and_widths():
    H = box([-1.0, -2.0], [3.0, 2.0])
    value, x = halfspace_support_exact(H, [1.0, 1.0])
    assert value == pytest.approx(5.0)
    assert np.allclose(x, [3.0, 2.0])
    assert np.allclose(halfspace_widths(H, np.eye(2)), [4.0, 4.0])


def test_unbounded_and_empty():
    open_quadrant = HalfspacePolytope(np.eye(2), np.ones(2))
    with pytest.raises(UnboundedError):
        check_bounded(open_quadrant)
    empty = box([1.0, 0.0], [0.0, 1.0])
    with pytest.raises(InfeasibleError):
        halfspace_support_exact(empty, [1.0, 0.0])


def test_chebyshev_center():
    center, radius = chebyshev_center(box([0.0, 0.0], [4.0, 2.0]))
    assert radius == pytest.approx(1.0)
    assert center[1] == pytest.approx(1.0)
    with pytest.raises(NotFullDimensionalError):
        chebyshev_center(box([0.0, 0.0], [0.0, 1.0]))


def test_hull_distance():
    assert hull_distance_exact(cube(2), [0.5, 0.5]) == 0.0
    assert hull_distance_exact(cube(2), [4.0, 0.0]) == pytest.approx(3.0, abs=1e-6)
    assert hull_distance_exact(cube(2), [4.0, 5.0]) == pytest.approx(5.0, abs=1e-6)


def test_envelope_min_of_duals():
    # duals of the square's corners: max over corners of (x r - y) is |r| + 1 at best -> min 1 at r = 0
    value, r = envelope_min_exact(cube(2).points, 3.0)
    assert value == pytest.approx(1.0)
    assert np.allclose(r, 0.0, atol=1e-9)


def test_origin_in_hull():
    assert origin_in_hull(cube(3))
    assert not origin_in_hull(cube(3, center=[3.0, 0.0, 0.0]))
    assert math.isclose(point_widths(cube(3), np.array([[0.0, 0.0, 2.0]]))[0], 2.0)


def test_halfspace_vertices_of_a_box():
    vertices = halfspace_vertices(box([-1.0, -2.0, 0.0], [3.0, 2.0, 1.0]))
    assert len(vertices) == 8
    assert sorted(map(tuple, np.round(vertices, 9)))[0] == (-1.0, -2.0, 0.0)


@pytest.mark.parametrize("d", [2, 3])
def test_vertex_widths_agree_with_lp_widths(rng, d):
    normals = rng.normal(size=(12 * d, d))
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    H = HalfspacePolytope(normals, rng.uniform(0.5, 1.5, size=12 * d))
    directions = rng.normal(size=(20, d))
    widths = point_widths(PointPolytope(halfspace_vertices(H)), directions)
    assert np.allclose(widths, halfspace_widths(H, directions), rtol=1e-7, atol=1e-9)


def test_halfspace_vertices_reject_unbounded_input():
    with pytest.raises(UnboundedError):
        halfspace_vertices(HalfspacePolytope(np.eye(2), np.ones(2)))


def edge_weights(n: int, picked) -> np.ndarray:
    weights = np.zeros(n)
    weights[list(picked)] = 0.5
    return weights


def test_rational_recheck_of_shared_edge():
    A = PointPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    B = PointPolytope(A.points + np.array([1.0, 0.0]))
    verdict = rational_verdict(A, B, edge_weights(4, [1, 2]), edge_weights(4, [0, 3]))
    assert verdict == ExactVerdict.INTERSECTING


def test_rational_recheck_of_a_tiny_gap():
    A = PointPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    B = PointPolytope(A.points + np.array([1.0 + 2.0 ** -40, 0.0]))
    verdict = rational_verdict(A, B, edge_weights(4, [1, 2]), edge_weights(4, [0, 3]))
    assert verdict == ExactVerdict.DISJOINT


def test_rational_recheck_without_a_certificate():
    A = PointPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]))
    B = PointPolytope(A.points + np.array([0.5, 0.0]))
    # weights on the far corners certify neither a common point nor a separating direction
    verdict = rational_verdict(A, B, edge_weights(4, [0, 3]), edge_weights(4, [1, 2]))
    assert verdict == ExactVerdict.AMBIGUOUS
