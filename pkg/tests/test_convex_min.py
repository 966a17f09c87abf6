import math

import numpy as np
import pytest
import hypothesis as hyp
import hypothesis.strategies as hys

from lib.convex_min import NoisyObjective, evaluation_bound, minimize_1d, minimize_nd
from lib.errors import InvalidParameterError


def noisy(f, eps):
    return NoisyObjective(lambda x: f(x) + eps * math.cos(997.0 * float(np.sum(x))), eps_eval=eps)


def test_parabola_exact():
    obj = NoisyObjective(lambda x: float((x[0] - 0.3) ** 2))
    found = minimize_1d(obj, -1.0, 1.0, 1e-6)
    assert found.argmin[0] == pytest.approx(0.3, abs=1e-5)
    assert found.evaluations == obj.evaluations


def test_abs_value_with_noise():
    eps = 0.01
    obj = noisy(lambda x: abs(float(x[0]) - 0.4), eps)
    found = minimize_1d(obj, -1.0, 1.0, eps)
    assert abs(found.argmin[0] - 0.4) <= 8 * eps


def test_minimum_at_boundary():
    obj = NoisyObjective(lambda x: float(x[0]))
    found = minimize_1d(obj, 2.0, 5.0, 1e-4)
    assert found.argmin[0] == pytest.approx(2.0)


def test_degenerate_interval():
    obj = NoisyObjective(lambda x: float(x[0]) ** 2)
    found = minimize_1d(obj, 1.0, 1.0, 0.1)
    assert found.argmin[0] == 1.0
    assert found.evaluations == 1


def test_invalid_arguments():
    obj = NoisyObjective(lambda x: 0.0)
    with pytest.raises(InvalidParameterError):
        minimize_1d(obj, 0.0, 1.0, 0.0)
    with pytest.raises(InvalidParameterError):
        minimize_1d(obj, 1.0, 0.0, 0.1)
    with pytest.raises(InvalidParameterError):
        minimize_nd(obj, 0.0, 1.0, 0, 0.1)


@hyp.settings(max_examples=60, deadline=None)
@hyp.given(
    center=hys.floats(min_value=-0.8, max_value=0.8),
    slope=hys.floats(min_value=0.2, max_value=1.0),
    eps=hys.sampled_from([0.05, 0.01, 0.001]),
)
def test_one_dimensional_guarantee(center, slope, eps):
    def f(x):
        return slope * abs(float(x[0]) - center)

    obj = noisy(f, eps)
    found = minimize_1d(obj, -1.0, 1.0, eps)
    assert f(found.argmin) <= 8 * eps
    assert found.evaluations <= evaluation_bound(-1.0, 1.0, eps)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_nested_search_guarantee(k):
    rng = np.random.default_rng(k)
    eps = 0.02
    budget = evaluation_bound(-1.0, 1.0, eps) ** k
    for _ in range(10 if k < 3 else 3):
        center = rng.uniform(-0.8, 0.8, size=k)
        weights = rng.uniform(0.2, 1.0, size=k)

        def f(x):
            return float(weights @ np.abs(x - center))

        obj = noisy(f, eps)
        found = minimize_nd(obj, -1.0, 1.0, k, eps)
        assert found.argmin.shape == (k,)
        assert f(found.argmin) <= 8 * k * eps
        assert found.evaluations <= budget


def test_fixed_prefix_is_respected():
    seen = []

    def f(x):
        seen.append(x.copy())
        return float(np.sum((x - 0.5) ** 2))

    minimize_nd(NoisyObjective(f), 0.0, 1.0, 1, 0.01, fixed=np.array([0.25]))
    assert all(x.shape == (2,) and x[0] == 0.25 for x in seen)
