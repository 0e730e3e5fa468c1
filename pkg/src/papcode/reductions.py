"""Turn task estimators into weakly-accurate mechanisms.

Each wrapper maps a +/-1 matrix to a sign vector.  Whenever the estimator
meets its own utility guarantee on an input where roughly half the columns
are +1-marked and half -1-marked, the sign vector strongly agrees with the
input (or, for clustering, with one of its blocks).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from papcode.errors import ContractViolationError, InvalidParameterError
from papcode.pap import marked_columns


def sign_vector(v) -> np.ndarray:
    """Entrywise sign with ``sign(0) = +1``, as int8."""
    out = (np.asarray(v) >= 0).astype(np.int8)
    out *= 2
    out -= 1
    return out


@dataclass(frozen=True)
class WeaklyAccurateMechanism:
    """Black box ``{-1,1}^{n x d} -> [-1,1]^d`` with its declared (k, alpha)."""

    apply: Callable
    alpha: float
    k: int = 1
    name: str = "mechanism"

    def __call__(self, X, rng) -> np.ndarray:
        X = np.asarray(X)
        q = np.asarray(self.apply(X, rng))
        if q.shape != (X.shape[1],):
            raise ContractViolationError(f"{self.name}: output length {q.shape} != {X.shape[1]}")
        if q.dtype != np.int8 and np.any(np.abs(q) > 1):
            raise ContractViolationError(f"{self.name}: output outside [-1, 1]")
        return q


@dataclass(frozen=True)
class ReductionParams:
    lam: float
    alpha: float
    gamma: float | None = None
    k: int = 1
    z: float | None = None
    xi: float | None = None
    m: int | None = None


def averaging_params(lam: float, d: int | None = None) -> ReductionParams:
    if lam < 1:
        raise InvalidParameterError("lambda must be at least 1")
    alpha = 1.0 / (40.0 * lam * lam + 1.0)
    gamma = None if d is None else math.sqrt(2.0 * alpha * d)
    return ReductionParams(lam=lam, alpha=alpha, gamma=gamma)


def svd_params(lam: float) -> ReductionParams:
    if lam < 1:
        raise InvalidParameterError("lambda must be at least 1")
    alpha = 1.0 / (4000.0 * lam * lam)
    return ReductionParams(lam=lam, alpha=alpha, gamma=math.sqrt(2 * alpha / (1 - 2 * alpha)))


def clustering_subsample_size(k: int, z: float, xi: float) -> int:
    """``m = k * floor(1 + 40^(z/2) * 2 xi / k)``."""
    return k * math.floor(1 + 40 ** (z / 2) * 2 * xi / k)


def clustering_params(k: int, z: float, lam: float, xi: float) -> ReductionParams:
    if k < 1 or z < 1 or lam < 1 or xi < 0:
        raise InvalidParameterError("need k >= 1, z >= 1, lambda >= 1, xi >= 0")
    alpha = 1.0 / (160.0 * (2.0 * lam) ** (2.0 / z))
    return ReductionParams(
        lam=lam, alpha=alpha, k=k, z=z, xi=xi, m=clustering_subsample_size(k, z, xi)
    )


def averaging_adversary(estimator: Callable, lam: float) -> WeaklyAccurateMechanism:
    """``X -> sign(estimator(sqrt(2 alpha d), X))`` with ``alpha = 1/(40 lam^2 + 1)``."""
    alpha = averaging_params(lam).alpha

    def apply(X, rng):
        gamma = math.sqrt(2.0 * alpha * X.shape[1])
        q = np.asarray(estimator(gamma, X, rng))
        if q.shape != (X.shape[1],):
            raise ContractViolationError("estimator output length mismatch")
        return sign_vector(q)

    return WeaklyAccurateMechanism(apply, alpha=alpha, name="averaging")


def clustering_adversary(
    clusterer: Callable, k: int, z: float, lam: float, xi: float, n: int, d: int
) -> WeaklyAccurateMechanism:
    """Sign of a uniformly chosen center out of ``k + 1`` computed on scaled points.

    The mechanism takes ``m`` rows, scales them by ``1/sqrt(d)``, pads with
    ``n - m`` zero points and calls ``clusterer(points, rng)``, which must
    return ``k + 1`` centers in the unit ball.
    """
    params = clustering_params(k, z, lam, xi)
    m = params.m
    if m > n:
        raise InvalidParameterError(f"subsample size m={m} exceeds n={n}")

    def apply(X, rng):
        if X.shape != (m, d):
            raise InvalidParameterError(f"expected input of shape {(m, d)}, got {X.shape}")
        points = np.zeros((n, d))
        points[:m] = X / math.sqrt(d)
        centers = np.asarray(clusterer(points, rng), dtype=float)
        if centers.shape != (k + 1, d):
            raise ContractViolationError(f"clusterer returned shape {centers.shape}")
        if np.any(np.linalg.norm(centers, axis=1) > 1 + 1e-9):
            raise ContractViolationError("center outside the unit ball")
        return sign_vector(centers[rng.integers(k + 1)])

    return WeaklyAccurateMechanism(apply, alpha=params.alpha, k=k, name="clustering")


def svd_adversary(
    estimator: Callable, lam: float
) -> tuple[WeaklyAccurateMechanism, WeaklyAccurateMechanism]:
    """The sign of an estimated top singular vector of ``X/sqrt(d)``, and its negation.

    Only one of the two is guaranteed to be weakly accurate.
    """
    params = svd_params(lam)

    def top_sign(X, rng):
        y = np.asarray(estimator(params.gamma, X / math.sqrt(X.shape[1]), rng), dtype=float)
        if y.shape != (X.shape[1],):
            raise ContractViolationError("estimator output length mismatch")
        if abs(np.linalg.norm(y) - 1.0) > 1e-6:
            raise ContractViolationError("estimator output is not a unit vector")
        return sign_vector(y)

    plain = WeaklyAccurateMechanism(top_sign, alpha=params.alpha, name="svd")
    negated = WeaklyAccurateMechanism(
        lambda X, rng: -top_sign(X, rng), alpha=params.alpha, name="svd-negated"
    )
    return plain, negated


# -- valid inputs and proof witnesses ---------------------------------------

def sample_precondition_matrix(n: int, d: int, alpha: float, rng) -> np.ndarray:
    """Random ``n x d`` matrix with at least ``(1-alpha)d/2`` columns marked for each sign.

    Unmarked columns get independent fair entries, so they may turn out
    marked as well.
    """
    need = math.ceil((1 - alpha) * d / 2 - 1e-9)
    if 2 * need > d:
        raise InvalidParameterError("d too small for this alpha")
    free = d - 2 * need
    extra_plus = rng.integers(0, free + 1)
    plus = need + extra_plus
    extra_minus = rng.integers(0, free - extra_plus + 1)
    minus = need + extra_minus
    X = np.where(rng.random((n, d)) < 0.5, 1, -1).astype(np.int8)
    X[:, :plus] = 1
    X[:, plus : plus + minus] = -1
    return X[:, rng.permutation(d)]


def sample_block_matrix(k: int, rows_per_block: int, d: int, alpha: float, rng) -> np.ndarray:
    return np.vstack(
        [sample_precondition_matrix(rows_per_block, d, alpha, rng) for _ in range(k)]
    )


def svd_witness_vector(X) -> np.ndarray:
    """``u_j = +1/sqrt(d)`` on +1-marked columns and ``-1/sqrt(d)`` elsewhere."""
    X = np.asarray(X)
    d = X.shape[1]
    u = np.full(d, -1.0 / math.sqrt(d))
    u[marked_columns(X).plus] = 1.0 / math.sqrt(d)
    return u


def clustering_witness_centers(X, k: int) -> np.ndarray:
    """Last scaled row of each of the ``k`` blocks, plus the origin."""
    X = np.asarray(X, dtype=float)
    m, d = X.shape
    if m % k:
        raise InvalidParameterError("rows must split evenly into k blocks")
    size = m // k
    centers = [X[(t + 1) * size - 1] / math.sqrt(d) for t in range(k)]
    return np.vstack(centers + [np.zeros(d)])
