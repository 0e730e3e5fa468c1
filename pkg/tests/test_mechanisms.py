import numpy as np
import pytest

from papcode.errors import InvalidParameterError
from papcode.mechanisms import (
    EstimatorSpec,
    build_estimator,
    clustering_cost,
    exact_average,
    gaussian_average,
    lloyd_kmeans,
    power_iteration_top_vector,
)


def test_exact_average_examples():
    assert exact_average(np.array([[1, -1], [1, 1]])).tolist() == [1, 0]
    assert exact_average(np.array([[3.0, 4.0]])).tolist() == [3.0, 4.0]
    with pytest.raises(InvalidParameterError):
        exact_average(np.empty((0, 2)))


def test_gaussian_zero_sigma(rng):
    X = rng.standard_normal((5, 7))
    assert np.array_equal(gaussian_average(X, 0.0, rng), exact_average(X))


def test_gaussian_noise_scale():
    X = np.zeros((2, 1000))
    r = np.random.default_rng(4)
    noise = np.stack([gaussian_average(X, 10.0, r) for _ in range(10)])
    assert abs(noise.std() - 10) < 1
    a = gaussian_average(X, 1.0, np.random.default_rng(2))
    b = gaussian_average(X, 1.0, np.random.default_rng(2))
    assert np.array_equal(a, b)


def test_spec_validation():
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("nope")
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("gaussian-average", sigma=-1)
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("power-iteration", iters=0)
    with pytest.raises(InvalidParameterError):
        EstimatorSpec("constant-output")


def test_constant_estimator():
    est = build_estimator(EstimatorSpec("constant-output", vector=np.array([0.5, -0.5])))
    assert est(1.0, np.ones((3, 2)), None).tolist() == [0.5, -0.5]
    with pytest.raises(InvalidParameterError):
        est(1.0, np.ones((3, 3)), None)


def test_lloyd_self_centers(rng):
    pts = rng.uniform(-0.3, 0.3, (6, 4))
    c = lloyd_kmeans(pts, 6, 5, rng)
    assert clustering_cost(pts, c) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(InvalidParameterError):
        lloyd_kmeans(pts, 7, 1, rng)


def test_lloyd_iters_zero_returns_init():
    pts = np.arange(12, dtype=float).reshape(6, 2) / 20
    a = lloyd_kmeans(pts, 3, 0, np.random.default_rng(1))
    idx = np.random.default_rng(1).choice(6, size=3, replace=False)
    assert np.array_equal(a, pts[idx])


def test_lloyd_separated_clouds(rng):
    a = 0.5 + 0.01 * rng.standard_normal((20, 3))
    b = -0.5 + 0.01 * rng.standard_normal((20, 3))
    c = lloyd_kmeans(np.vstack([a, b]), 2, 10, rng)
    c = c[np.argsort(c[:, 0])]
    assert np.all(c[0] >= b.min(axis=0)) and np.all(c[0] <= b.max(axis=0))
    assert np.all(c[1] >= a.min(axis=0)) and np.all(c[1] <= a.max(axis=0))


def test_lloyd_cost_monotone():
    r = np.random.default_rng(8)
    for _ in range(100):
        m, d, k = int(r.integers(5, 30)), int(r.integers(1, 6)), int(r.integers(1, 5))
        pts = r.uniform(-1, 1, (m, d)) / np.sqrt(d)
        seed = int(r.integers(2**31))
        costs = [
            clustering_cost(pts, lloyd_kmeans(pts, k, it, np.random.default_rng(seed)))
            for it in range(6)
        ]
        assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))


def test_power_iteration_rank_one(rng):
    a, b = rng.standard_normal(7), rng.standard_normal(11)
    v = power_iteration_top_vector(np.outer(a, b), 20, rng)
    assert np.linalg.norm(v) == pytest.approx(1.0, abs=1e-12)
    assert min(np.linalg.norm(v - b / np.linalg.norm(b)), np.linalg.norm(v + b / np.linalg.norm(b))) < 1e-6


def test_power_iteration_monotone_and_converges():
    r = np.random.default_rng(9)
    for _ in range(20):
        X = r.standard_normal((20, 30))
        seed = int(r.integers(2**31))
        quot = [
            np.linalg.norm(X @ power_iteration_top_vector(X, it, np.random.default_rng(seed))) ** 2
            for it in (0, 1, 2, 5, 10)
        ]
        assert all(b >= a - 1e-9 for a, b in zip(quot, quot[1:]))
        top = np.linalg.eigvalsh(X.T @ X)[-1]
        v = power_iteration_top_vector(X, 5000, np.random.default_rng(seed))
        assert np.linalg.norm(X @ v) ** 2 == pytest.approx(top, abs=1e-6)


def test_power_iteration_zero():
    with pytest.raises(InvalidParameterError):
        power_iteration_top_vector(np.zeros((2, 2)), 3, np.random.default_rng(0))
