"""Hard distribution over codebooks.

Column biases are drawn from the prior ``rho`` (``p = tanh(t/2)`` with ``t``
uniform on ``[-ln 5n, ln 5n]``), and each codebook entry is an independent
+/-1 variable with mean equal to its column bias.  An extra reference row
drawn the same way is kept alongside the codebook for tracing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from papcode.errors import InvalidParameterError, OutOfSupportError


def bias_limit(n: int) -> float:
    """Largest bias magnitude reachable for ``n`` users, ``1 - 2/(5n+1)``."""
    return 1.0 - 2.0 / (5 * n + 1)


def _check_users(n: int) -> None:
    if int(n) != n or n < 1:
        raise InvalidParameterError(f"n must be a positive integer, got {n!r}")


@dataclass(frozen=True)
class BiasVector:
    biases: np.ndarray
    n: int

    def __post_init__(self):
        _check_users(self.n)
        b = np.asarray(self.biases, dtype=float)
        if b.ndim != 1:
            raise InvalidParameterError("biases must be one-dimensional")
        if np.any(np.abs(b) > bias_limit(self.n) + 1e-12):
            raise OutOfSupportError("bias outside the support of rho")
        b.setflags(write=False)
        object.__setattr__(self, "biases", b)

    def __len__(self):
        return len(self.biases)


@dataclass(frozen=True)
class HardInstance:
    """A draw from the hard distribution: codebook, reference row, biases."""

    codebook: np.ndarray
    reference: np.ndarray
    biases: BiasVector

    def __post_init__(self):
        cb = np.asarray(self.codebook, dtype=np.int8)
        ref = np.asarray(self.reference, dtype=np.int8)
        if cb.ndim != 2 or ref.shape != (cb.shape[1],) or len(self.biases) != cb.shape[1]:
            raise InvalidParameterError("inconsistent instance dimensions")
        cb.setflags(write=False)
        ref.setflags(write=False)
        object.__setattr__(self, "codebook", cb)
        object.__setattr__(self, "reference", ref)

    @property
    def n(self) -> int:
        return self.codebook.shape[0]

    @property
    def d(self) -> int:
        return self.codebook.shape[1]


def sample_bias(n: int, rng, size=None):
    """Draw bias(es) from rho for ``n`` users.

    ``rng`` only needs a ``uniform(low, high, size)`` method, so tests can pin
    ``t`` with a stub.
    """
    _check_users(n)
    half = math.log(5 * n)
    t = rng.uniform(-half, half, size)
    return np.tanh(np.asarray(t) / 2.0) if size is not None else math.tanh(float(t) / 2.0)


def bias_density(p: float, n: int) -> float:
    _check_users(n)
    if abs(p) > bias_limit(n) + 1e-15:
        raise OutOfSupportError(f"p={p} lies outside [-{bias_limit(n)}, {bias_limit(n)}]")
    return 1.0 / (math.log(5 * n) * (1.0 - p * p))


def bias_cdf(p, n: int):
    """Closed-form CDF of rho; clipped to [0, 1] outside the support."""
    _check_users(n)
    p = np.clip(np.asarray(p, dtype=float), -bias_limit(n), bias_limit(n))
    return (np.log1p(p) - np.log1p(-p)) / (2.0 * math.log(5 * n)) + 0.5


def sample_column(p: float, n: int, rng) -> np.ndarray:
    """``n`` independent +/-1 entries, each +1 with probability (1+p)/2."""
    if abs(p) > 1:
        raise InvalidParameterError(f"|p| must be at most 1, got {p}")
    _check_users(n)
    return np.where(rng.random(n) < (1.0 + p) / 2.0, 1, -1).astype(np.int8)


def _signs_with_bias(biases: np.ndarray, rows: int, rng) -> np.ndarray:
    # row-by-row keeps the float temporaries at O(d)
    thresh = (1.0 + biases) / 2.0
    out = np.empty((rows, len(biases)), dtype=np.int8)
    for i in range(rows):
        out[i] = np.where(rng.random(len(biases)) < thresh, 1, -1)
    return out


def sample_instance(n: int, d: int, rng) -> HardInstance:
    """Draw ``(x_1..x_n, z)`` with per-column biases from rho.

    Entries of the codebook and of the reference row are independent given
    the biases.  Column ``j`` of every row uses bias ``p[j]``.
    """
    _check_users(n)
    if int(d) != d or d < 1:
        raise InvalidParameterError(f"d must be a positive integer, got {d!r}")
    p = sample_bias(n, rng, size=d)
    rows = _signs_with_bias(p, n + 1, rng)
    return HardInstance(codebook=rows[:n], reference=rows[n], biases=BiasVector(p, n))
