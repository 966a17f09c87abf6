import math

import numpy as np
import pytest

from lib.errors import InvalidParameterError, NotFullDimensionalError
from lib.fattening import (
    SymmetricBody,
    certificate_ratio,
    fatten_transform,
    fattened_radii,
    minkowski_body,
    negate_body,
    sandwich_box,
    translate_body,
    width_ratio,
)
from lib.generators import InstanceSpec, generate
from lib.geometry import AffineMap, PointPolytope, affine_apply, sample_directions
from tests.conftest import circle


@pytest.mark.parametrize("kind,d", [("random-hull", 2), ("random-hull", 3), ("simplex", 3), ("rotated-box", 4)])
def test_sandwich_certificate_on_sample(kind, d, settings):
    S = generate(InstanceSpec(kind=kind, d=d, n=200, seed=3)).polytope
    body = sandwich_box(S, settings)
    directions = sample_directions(d, 10 * 3 ** d)
    inner, outer = certificate_ratio(body, S.points, directions)
    assert inner <= 1.0 + 1e-9
    assert outer <= 1.0 + 1e-9


def test_sandwich_factor_bounded(settings):
    body = sandwich_box(circle(200), settings)
    assert 1.0 <= body.lam <= 2 ** 1.5 * settings.sandwich_slack


def test_thin_box_fattens(settings):
    S = PointPolytope(np.array([[0, 0], [1, 0], [0, 0.01], [1, 0.01]], dtype=float))
    T = fatten_transform(sandwich_box(S, settings))
    assert width_ratio(T.apply(S.points), sample_directions(2, 200)) > 0.3
    assert width_ratio(S.points, sample_directions(2, 200)) < 0.02


def test_fattened_body_between_balls(rng, settings):
    S = PointPolytope(rng.normal(size=(300, 3)) * np.array([10.0, 1.0, 0.1]))
    body = sandwich_box(S, settings)
    T = fatten_transform(body)
    inner, outer = fattened_radii(body)
    X = T.apply(S.points)
    directions = sample_directions(3, 400, seed=2)
    h = np.max(X @ directions.T, axis=0)
    assert np.all(h >= 0.9 * inner)
    assert np.max(np.linalg.norm(X, axis=1)) <= outer + 1e-9


def test_affine_invariance_of_lambda(rng, settings):
    S = PointPolytope(rng.normal(size=(100, 2)))
    body = sandwich_box(S, settings)
    T = AffineMap(np.array([[3.0, 1.0], [0.0, 0.5]]), np.array([4.0, -2.0]))
    image = body.mapped(T)
    assert image.lam == body.lam
    # the sampled certificate directions, carried into the image frame
    directions = sample_directions(2, 90) @ np.linalg.inv(T.matrix)
    inner, outer = certificate_ratio(image, affine_apply(T, S).points, directions)
    assert inner <= 1.0 + 1e-9 and outer <= 1.0 + 1e-9


def test_degenerate_input_rejected(settings):
    collinear = PointPolytope(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
    with pytest.raises(NotFullDimensionalError):
        sandwich_box(collinear, settings)


def test_minkowski_body_support_adds():
    A = SymmetricBody(np.array([1.0, 0.0]), np.eye(2), 2.0)
    B = SymmetricBody(np.array([0.0, 3.0]), 0.5 * np.eye(2), 3.0)
    total = minkowski_body(A, B)
    v = np.array([0.6, -0.8])
    assert total.support(v) == pytest.approx(A.support(v) + B.support(v))
    assert total.lam == 3.0


def test_negate_and_translate():
    A = SymmetricBody(np.array([1.0, 2.0]), np.eye(2), 1.5)
    assert np.allclose(negate_body(A).center, [-1.0, -2.0])
    assert np.allclose(translate_body(A, np.array([1.0, 1.0])).center, [2.0, 3.0])


def test_body_validation():
    with pytest.raises(NotFullDimensionalError):
        SymmetricBody(np.zeros(2), np.array([[1.0, 0.0]]), 1.0)
    with pytest.raises(InvalidParameterError):
        SymmetricBody(np.zeros(2), np.eye(2), 0.5)


def test_fatten_transform_maps_whitening_ellipsoid_to_unit_ball():
    body = SymmetricBody(np.array([1.0, 1.0]), np.diag([2.0, 0.5]), 1.0)
    T = fatten_transform(body)
    assert np.allclose(T.apply(body.center), 0.0)
    assert np.allclose(T.matrix, np.diag([0.5, 2.0]))
    assert math.isclose(fattened_radii(body)[1], math.sqrt(2.0))


@pytest.mark.parametrize("d", [2, 3])
def test_fattening_twice_is_nearly_the_identity(d, settings):
    S = generate(InstanceSpec(kind="random-hull", d=d, n=150, seed=5)).polytope
    directions = sample_directions(d, 300, seed=4)
    body = sandwich_box(S, settings)
    once = fatten_transform(body).apply(S.points)
    again = fatten_transform(sandwich_box(PointPolytope(once), settings))
    twice = again.apply(once)
    assert width_ratio(twice, directions) >= 0.9 * width_ratio(once, directions)
    assert np.linalg.cond(again.matrix) <= 2.5 * fattened_radii(body)[1]
