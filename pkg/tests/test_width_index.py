import numpy as np
import pytest

from lib.config import Settings
from lib.errors import DimensionMismatchError, InvalidParameterError
from lib.generators import InstanceSpec, generate
from lib.geometry import AffineMap, PointPolytope, affine_apply, sample_directions, support, width_exact
from lib.oracles import point_widths
from lib.width_index import build, query_support, query_support_many, query_width, restore, sum_width
from tests.conftest import circle


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("eps", [0.2, 0.05])
def test_width_queries_never_drop_below_factor(d, eps, settings):
    directions = sample_directions(d, 300, seed=d)
    for seed in range(3):
        S = generate(InstanceSpec(kind="random-hull", d=d, n=400, seed=seed)).polytope
        idx = build(S, eps, settings)
        exact = point_widths(S, directions)
        approx = np.array([query_width(idx, v).width for v in directions])
        assert np.all(approx >= (1.0 - eps) * exact - 1e-12)
        assert np.all(approx <= exact + 1e-9)


def test_kernel_is_subset_of_input(disk, settings):
    idx = build(disk, 0.05, settings)
    assert np.array_equal(idx.kernel, disk.points[idx.kernel_indices])
    assert len(idx) <= len(disk)
    assert idx.source_size == len(disk)


def test_kernel_grows_like_inverse_sqrt_eps(settings):
    S = circle(4000)
    sizes = [len(build(S, eps, settings)) for eps in (0.04, 0.01, 0.0025)]
    assert sizes[0] < sizes[1] < sizes[2]
    slope = np.polyfit(np.log([25.0, 100.0, 400.0]), np.log(sizes), 1)[0]
    assert 0.3 <= slope <= 0.7


def test_query_width_witnesses_are_input_points(rng, settings):
    S = PointPolytope(rng.normal(size=(200, 3)))
    idx = build(S, 0.1, settings)
    v = np.array([0.3, -1.0, 2.0])
    p, q, w = query_width(idx, v)
    assert any(np.array_equal(p, x) for x in S.points)
    assert w == pytest.approx(float(v @ (p - q)) / np.linalg.norm(v))


def test_support_upper_bound(rng, settings):
    S = PointPolytope(rng.normal(size=(300, 2)))
    eps = 0.1
    idx = build(S, eps, settings)
    for v in sample_directions(2, 100, seed=4):
        h, _ = support(S, v)
        value, witness = query_support(idx, v)
        assert value <= h + 1e-12
        assert h <= value + eps * width_exact(S, v) + 1e-12
        assert float(witness @ v) == pytest.approx(value)


def test_queries_under_affine_map(rng, settings):
    S = PointPolytope(rng.normal(size=(300, 2)))
    T = AffineMap(np.array([[5.0, 1.0], [0.0, 0.2]]), np.array([1.0, -3.0]))
    eps = 0.1
    idx = build(S, eps, settings)
    image = affine_apply(T, S)
    for v in sample_directions(2, 50, seed=1):
        w = query_width(idx, v, T).width
        assert w >= (1.0 - eps) * width_exact(image, v) - 1e-12
        h, _ = support(image, v)
        value, witness = query_support(idx, v, T)
        assert value <= h + 1e-9
        assert float(witness @ v) == pytest.approx(value)


def test_batched_support_matches_single(rng, settings):
    S = PointPolytope(rng.normal(size=(100, 3)))
    idx = build(S, 0.1, settings)
    T = AffineMap(np.diag([2.0, 1.0, 0.5]), np.array([0.0, 1.0, 2.0]))
    directions = rng.normal(size=(20, 3))
    values, witnesses = query_support_many(idx, directions, T)
    for v, value, witness in zip(directions, values, witnesses):
        single = query_support(idx, v, T)
        assert value == pytest.approx(single.value)
        assert np.allclose(witness @ v, single.value)


def test_sum_width_adds_and_negates(rng, settings):
    A = PointPolytope(rng.normal(size=(50, 2)))
    B = PointPolytope(rng.normal(size=(50, 2)) + 5.0)
    idxA, idxB = build(A, 0.1, settings), build(B, 0.1, settings)
    v = np.array([1.0, 2.0])
    total = sum_width(idxA, idxB, v)
    assert total.width == pytest.approx(query_width(idxA, v).width + query_width(idxB, v).width)
    diff = sum_width(idxA, idxB, v, negate_b=True)
    assert float(v @ (diff.upper - diff.lower)) / np.linalg.norm(v) == pytest.approx(diff.width)


def test_buckets_agree_with_scan(rng):
    S = PointPolytope(rng.normal(size=(500, 2)))
    eps = 0.05
    plain = build(S, eps, Settings())
    bucketed = build(S, eps, Settings(use_buckets=True))
    assert np.array_equal(plain.kernel_indices, bucketed.kernel_indices)
    for v in sample_directions(2, 200, seed=9):
        assert query_width(bucketed, v).width >= (1.0 - eps) * width_exact(S, v) - 1e-12


def test_restore_matches_build(rng, settings):
    S = PointPolytope(rng.normal(size=(200, 2)))
    idx = build(S, 0.1, settings)
    again = restore(S, idx.eps, idx.kernel_indices.tolist(), idx.body, idx.own_map, settings)
    assert np.array_equal(again.kernel, idx.kernel)
    with pytest.raises(InvalidParameterError):
        restore(S, 0.1, [len(S)], idx.body, idx.own_map, settings)


def test_invalid_eps_and_dimension(square, settings):
    with pytest.raises(InvalidParameterError):
        build(square, 0.0, settings)
    with pytest.raises(InvalidParameterError):
        build(square, 1.0, settings)
    idx = build(square, 0.1, settings)
    with pytest.raises(DimensionMismatchError):
        query_width(idx, [1.0, 0.0, 0.0])
