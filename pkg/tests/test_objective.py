import math

import numpy as np
import pytest

from core.errors import DimensionError
from core.manifold import Euclidean, ManifoldPoint, Sphere
from core.objective import (
    HalfSquare, Quadratic, SphereHeight,
    evaluate, euclidean_gradient, finite_difference_gradient, gradient_gap_ratio,
    gradient_relative_error, lipschitz_estimate, riemannian_gradient, sampled_lipschitz,
)

from .conftest import QUAD_A, QUAD_B, X_STAR

SQ = 1.0 / math.sqrt(2.0)


def test_quadratic_values(quadratic):
    assert evaluate(quadratic, [0.0, 0.0]) == 0.0
    assert evaluate(quadratic, X_STAR) == pytest.approx(-15.0 / 22.0, abs=1e-12)
    np.testing.assert_allclose(quadratic.minimizer_coords(), X_STAR, atol=1e-15)
    assert quadratic.optimal_value == pytest.approx(-15.0 / 22.0, abs=1e-12)


def test_sphere_height_value_at_south_pole(sphere):
    assert evaluate(SphereHeight(), ManifoldPoint(manifold=sphere, coords=(0, 0, -1))) == -1.0


def test_euclidean_gradients(quadratic):
    np.testing.assert_array_equal(euclidean_gradient(quadratic, [0.0, 0.0]), [-1.0, -2.0])
    np.testing.assert_allclose(euclidean_gradient(quadratic, X_STAR), [0.0, 0.0], atol=1e-15)
    np.testing.assert_array_equal(euclidean_gradient(SphereHeight(), [0.3, 0.4, 0.5]), [0.0, 0.0, 1.0])


def test_riemannian_gradients(sphere, quadratic, plane):
    f = SphereHeight()
    south = ManifoldPoint(manifold=sphere, coords=(0, 0, -1))
    np.testing.assert_array_equal(riemannian_gradient(f, south).coords, [0.0, 0.0, 0.0])
    p = ManifoldPoint(manifold=sphere, coords=(SQ, 0, SQ))
    np.testing.assert_allclose(riemannian_gradient(f, p).coords, [-0.5, 0.0, 0.5], atol=1e-12)
    origin = ManifoldPoint(manifold=plane, coords=(0, 0))
    np.testing.assert_array_equal(riemannian_gradient(quadratic, origin).coords, [-1.0, -2.0])


def test_sphere_height_riemannian_gradient_closed_form(sphere):
    rng = np.random.default_rng(0)
    f = SphereHeight()
    for _ in range(100):
        x = sphere._random_point(rng)
        expected = np.array([-x[2] * x[0], -x[2] * x[1], 1.0 - x[2] ** 2])
        g = riemannian_gradient(f, ManifoldPoint(manifold=sphere, coords=x))
        np.testing.assert_allclose(g.coords, expected, atol=1e-12)


def test_finite_difference_examples(quadratic):
    np.testing.assert_allclose(finite_difference_gradient(HalfSquare(), [3.0], 1e-6), [3.0], atol=1e-6)
    np.testing.assert_allclose(finite_difference_gradient(quadratic, [1.0, 1.0], 1e-6), [4.0, 2.0], atol=1e-5)
    np.testing.assert_allclose(
        finite_difference_gradient(SphereHeight(), [0.6, 0.0, 0.8], 1e-6), [0.0, 0.0, 1.0], atol=1e-9
    )


@pytest.mark.parametrize("h", [0.0, 1e-11, 0.1])
def test_finite_difference_rejects_bad_step(quadratic, h):
    with pytest.raises(ValueError):
        finite_difference_gradient(quadratic, [0.0, 0.0], h)


def _gradient_oracle_cases():
    yield Quadratic(A=QUAD_A, b=QUAD_B), Euclidean(dim=2)
    yield HalfSquare(n=3), Euclidean(dim=3)
    yield SphereHeight(), Sphere(ambient_dim=3)


@pytest.mark.parametrize("f, m", list(_gradient_oracle_cases()))
def test_gradient_oracle_suite(f, m):
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = m._random_point(rng)
        err = gradient_relative_error(euclidean_gradient(f, x), finite_difference_gradient(f, x, 1e-6))
        assert err <= 1e-5


def test_dimension_mismatch(quadratic):
    with pytest.raises(DimensionError):
        evaluate(quadratic, [1.0, 2.0, 3.0])


def test_quadratic_validation():
    with pytest.raises(ValueError):
        Quadratic(A=[[1.0, 2.0], [0.0, 1.0]], b=[0.0, 0.0])
    with pytest.raises(ValueError):
        Quadratic(A=[[1.0, 0.0], [0.0, -1.0]], b=[0.0, 0.0])
    with pytest.raises(ValueError):
        Quadratic(A=[[1.0, 0.0], [0.0, 1.0]], b=[0.0, 0.0, 0.0])


def test_lipschitz_estimates(quadratic):
    assert lipschitz_estimate(HalfSquare(n=2), Euclidean(dim=2)) == pytest.approx(1.0, abs=1e-12)
    assert lipschitz_estimate(quadratic, Euclidean(dim=2)) == pytest.approx((7 + math.sqrt(5)) / 2, abs=1e-12)
    sampled = lipschitz_estimate(SphereHeight(), Sphere(ambient_dim=3), n_samples=10_000, seed=0)
    assert 0.9 <= sampled <= 1.0 + 1e-6


def test_sampled_lipschitz_is_a_lower_bound():
    # ∇f = x 时比值在欧氏空间恒为 1
    assert sampled_lipschitz(HalfSquare(n=3), Euclidean(dim=3), 200, seed=1) == pytest.approx(1.0, abs=1e-12)


def test_gradient_gap_ratio(sphere):
    f = SphereHeight()
    north = ManifoldPoint(manifold=sphere, coords=(0, 0, 1))
    assert gradient_gap_ratio(f, north) == 0.0
    equator = ManifoldPoint(manifold=sphere, coords=(1, 0, 0))
    assert gradient_gap_ratio(f, equator) == pytest.approx(math.pi / 2, abs=1e-12)
    south = ManifoldPoint(manifold=sphere, coords=(0, 0, -1))
    assert gradient_gap_ratio(f, south) is None
