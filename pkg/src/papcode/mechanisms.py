"""Reference estimators for the attacks.

None of these are differentially private.  The exact ones should be
traceable; constant output should not be.  Every estimator built by
``build_estimator`` has the signature ``(gamma, points, rng) -> ndarray``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from papcode.errors import InvalidParameterError

ESTIMATOR_KINDS = (
    "exact-average",
    "gaussian-average",
    "constant-output",
    "lloyd-kmeans",
    "power-iteration",
)


@dataclass(frozen=True)
class EstimatorSpec:
    kind: str
    sigma: float = 0.0
    vector: np.ndarray | None = field(default=None, compare=False)
    k: int = 1
    iters: int = 1

    def __post_init__(self):
        if self.kind not in ESTIMATOR_KINDS:
            raise InvalidParameterError(f"unknown estimator kind {self.kind!r}")
        if self.sigma < 0:
            raise InvalidParameterError("sigma must be non-negative")
        if self.iters < 1 and self.kind in ("lloyd-kmeans", "power-iteration"):
            raise InvalidParameterError("iters must be at least 1")
        if self.kind == "constant-output" and self.vector is None:
            raise InvalidParameterError("constant-output needs a vector")


def _points(points) -> np.ndarray:
    points = np.asarray(points)
    if points.ndim != 2 or points.shape[0] == 0:
        raise InvalidParameterError("expected a non-empty (n, d) matrix")
    return points


def exact_average(points, gamma=None) -> np.ndarray:
    points = _points(points)
    if points.dtype == np.int8 and points.shape[0] <= 64:
        # +/-1 codebooks: exact integer column sums, then one division
        s = points[0].astype(np.int16)
        for row in points[1:]:
            s += row
        out = s.astype(float)
        out /= points.shape[0]
        return out
    return points.mean(axis=0)


def gaussian_average(points, sigma: float, rng) -> np.ndarray:
    if sigma < 0:
        raise InvalidParameterError("sigma must be non-negative")
    mean = exact_average(points)
    if sigma == 0:
        return mean
    return mean + rng.normal(0.0, sigma, size=mean.shape)


def clustering_cost(points, centers, z: float = 2.0) -> float:
    """Sum over points of the z-th power of the distance to the nearest center."""
    points = np.asarray(points, dtype=float)
    centers = np.asarray(centers, dtype=float)
    sq = (
        (points**2).sum(axis=1)[:, None]
        - 2.0 * points @ centers.T
        + (centers**2).sum(axis=1)[None, :]
    )
    nearest = np.sqrt(np.maximum(sq.min(axis=1), 0.0))
    return float((nearest**z).sum())


def _clip_to_ball(centers: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(centers, axis=1, keepdims=True)
    return np.where(norms > 1.0, centers / np.maximum(norms, 1e-300), centers)


def lloyd_kmeans(points, k_centers: int, iters: int, rng) -> np.ndarray:
    """Lloyd's algorithm from a uniformly random subset of the points.

    Empty clusters keep their previous center.  Means of points in the unit
    ball stay in it, so clipping only guards against rounding.
    """
    points = _points(points).astype(float)
    m = points.shape[0]
    if k_centers < 1 or k_centers > m:
        raise InvalidParameterError(f"need 1 <= k_centers <= {m}, got {k_centers}")
    if iters < 0:
        raise InvalidParameterError("iters must be non-negative")
    centers = points[rng.choice(m, size=k_centers, replace=False)].copy()
    for _ in range(iters):
        sq = ((points[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        label = sq.argmin(axis=1)
        for c in range(k_centers):
            members = points[label == c]
            if len(members):
                centers[c] = members.mean(axis=0)
        centers = _clip_to_ball(centers)
    return centers


def power_iteration_top_vector(X, iters: int, rng) -> np.ndarray:
    """Top right singular vector by power iteration on ``X^T X``."""
    X = _points(X).astype(float)
    if not np.any(X):
        raise InvalidParameterError("power iteration needs a non-zero matrix")
    if iters < 0:
        raise InvalidParameterError("iters must be non-negative")
    v = rng.standard_normal(X.shape[1])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = X.T @ (X @ v)
        norm = np.linalg.norm(w)
        if norm == 0:
            # start was orthogonal to the row space; restart
            v = rng.standard_normal(X.shape[1])
            v /= np.linalg.norm(v)
            continue
        v = w / norm
    return v


def build_estimator(spec: EstimatorSpec) -> Callable:
    """Adapt ``spec`` to the ``(gamma, points, rng)`` black-box signature."""
    kind = spec.kind
    if kind == "exact-average":
        return lambda gamma, points, rng: exact_average(points)
    if kind == "gaussian-average":
        return lambda gamma, points, rng: gaussian_average(points, spec.sigma, rng)
    if kind == "constant-output":
        vec = np.asarray(spec.vector, dtype=float)

        def constant(gamma, points, rng):
            if np.asarray(points).shape[1] != len(vec):
                raise InvalidParameterError("constant vector has the wrong length")
            return vec.copy()

        return constant
    if kind == "lloyd-kmeans":
        return lambda gamma, points, rng: lloyd_kmeans(points, spec.k, spec.iters, rng)
    return lambda gamma, points, rng: power_iteration_top_vector(points, spec.iters, rng)
