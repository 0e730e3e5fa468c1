"""Fingerprinting-lemma statistic, Monte Carlo estimator and exact oracle.

For a column ``x`` drawn with bias ``p ~ rho``, the statistic is
``f(x) * sum_i (x_i - p)``.  Any ``f`` pinned to +1 on the all-ones column and
-1 on the all-minus-ones column has expectation at least ``1/ln(5n)``; a
randomized ``f`` that hits those values with probability 0.9 still gets
``0.4/ln(5n)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from papcode.errors import BudgetExceededError, ContractViolationError, InvalidParameterError
from papcode.hard_dist import sample_bias

ORACLE_MAX_USERS = 12


@dataclass(frozen=True)
class LemmaAdversary:
    """Black box ``{-1,1}^n -> [-1,1]``.

    With ``vectorized=True`` the callable receives an ``(m, n)`` batch and
    returns ``m`` values; otherwise it is called once per column.  Both forms
    take the rng as second argument.
    """

    evaluate: Callable
    name: str = "adversary"
    deterministic: bool = True
    vectorized: bool = False

    def batch(self, columns: np.ndarray, rng) -> np.ndarray:
        columns = np.atleast_2d(columns)
        if self.vectorized:
            out = np.asarray(self.evaluate(columns, rng), dtype=float)
        else:
            out = np.array([float(self.evaluate(c, rng)) for c in columns])
        if out.shape != (columns.shape[0],):
            raise ContractViolationError(f"{self.name}: expected {columns.shape[0]} outputs")
        if np.any(np.abs(out) > 1.0) or not np.all(np.isfinite(out)):
            raise ContractViolationError(f"{self.name}: output outside [-1, 1]")
        return out


@dataclass(frozen=True)
class EstimateReport:
    mean: float
    stderr: float
    trials: int
    bound: float

    @property
    def lower(self) -> float:
        """Three-sigma lower confidence value, ``mean - 3*stderr``."""
        return self.mean - 3.0 * self.stderr

    @property
    def passes(self) -> bool:
        return self.lower >= self.bound


def lemma_bound(n: int, robust: bool = False) -> float:
    return (0.4 if robust else 1.0) / math.log(5 * n)


def lemma_statistic(f_value: float, column, p: float) -> float:
    column = np.asarray(column, dtype=float)
    if column.size == 0:
        raise InvalidParameterError("column must be non-empty")
    if abs(f_value) > 1 or abs(p) > 1:
        raise InvalidParameterError("f_value and p must lie in [-1, 1]")
    return float(f_value * np.sum(column - p))


# -- adversary battery -------------------------------------------------------

def _sign(v):
    return np.where(v >= 0, 1.0, -1.0)


def identity_adversary() -> LemmaAdversary:
    """Column average; equals ``f(x) = x`` when n = 1."""
    return LemmaAdversary(lambda x, rng: x.mean(axis=1), "identity", vectorized=True)


def majority_adversary() -> LemmaAdversary:
    """Sign of the column sum, ties to +1."""
    return LemmaAdversary(lambda x, rng: _sign(x.sum(axis=1)), "majority", vectorized=True)


def dictator_adversary() -> LemmaAdversary:
    return LemmaAdversary(lambda x, rng: x[:, 0].astype(float), "dictator", vectorized=True)


def extremes_only_adversary() -> LemmaAdversary:
    """+/-1 on the two constant columns, 0 everywhere else."""

    def f(x, rng):
        n = x.shape[1]
        s = x.sum(axis=1)
        return np.where(s == n, 1.0, np.where(s == -n, -1.0, 0.0))

    return LemmaAdversary(f, "extremes-only", vectorized=True)


def parity_adversary() -> LemmaAdversary:
    """Product of the entries, forced to -1 on the all-minus-ones column."""

    def f(x, rng):
        n = x.shape[1]
        prod = np.prod(x, axis=1).astype(float)
        return np.where(x.sum(axis=1) == -n, -1.0, prod)

    return LemmaAdversary(f, "parity-corrected", vectorized=True)


def noisy_adversary(base: LemmaAdversary, flip: float = 0.1) -> LemmaAdversary:
    """Negate ``base``'s output independently with probability ``flip``."""
    if not 0 <= flip <= 1:
        raise InvalidParameterError("flip probability must lie in [0, 1]")

    def f(x, rng):
        out = base.batch(x, rng)
        return np.where(rng.random(len(out)) < flip, -out, out)

    return LemmaAdversary(f, f"noisy-{base.name}", deterministic=False, vectorized=True)


DETERMINISTIC_BATTERY = {
    "identity": identity_adversary,
    "majority": majority_adversary,
    "dictator": dictator_adversary,
    "extremes-only": extremes_only_adversary,
    "parity-corrected": parity_adversary,
}


def named_adversary(name: str) -> LemmaAdversary:
    if name == "noisy-majority":
        return noisy_adversary(majority_adversary(), 0.1)
    try:
        return DETERMINISTIC_BATTERY[name]()
    except KeyError:
        raise InvalidParameterError(f"unknown adversary {name!r}") from None


# -- estimation --------------------------------------------------------------

def _merge(a, b):
    # Chan et al. pairwise combination of (count, mean, M2)
    na, ma, m2a = a
    nb, mb, m2b = b
    n = na + nb
    delta = mb - ma
    return n, ma + delta * nb / n, m2a + m2b + delta * delta * na * nb / n


def estimate_lemma_expectation(
    adv: LemmaAdversary, n: int, trials: int, rng, chunk: int = 20_000
) -> EstimateReport:
    """Monte Carlo estimate of ``E[f(x) * sum(x_i - p)]`` under rho."""
    if trials < 2:
        raise InvalidParameterError("need at least two trials")
    if n < 1:
        raise InvalidParameterError("n must be positive")
    acc = (0, 0.0, 0.0)
    done = 0
    while done < trials:
        m = min(chunk, trials - done)
        p = sample_bias(n, rng, size=m)
        cols = np.where(rng.random((m, n)) < ((1.0 + p) / 2.0)[:, None], 1, -1).astype(np.int8)
        f = adv.batch(cols, rng)
        stats = f * (cols.sum(axis=1) - n * p)
        acc = _merge(acc, (m, stats.mean(), ((stats - stats.mean()) ** 2).sum()))
        done += m
    count, mean, m2 = acc
    stderr = math.sqrt(m2 / (count - 1)) / math.sqrt(count)
    bound = lemma_bound(n, robust=not adv.deterministic)
    return EstimateReport(mean=float(mean), stderr=stderr, trials=count, bound=bound)


def oracle_lemma_expectation(adv: LemmaAdversary, n: int, quad_points: int = 10_000) -> float:
    """Exact expectation over x by enumeration, midpoint quadrature over t."""
    if not adv.deterministic:
        raise InvalidParameterError("oracle requires a deterministic adversary")
    if n > ORACLE_MAX_USERS:
        raise BudgetExceededError(f"enumeration limited to n <= {ORACLE_MAX_USERS}")
    if n < 1 or quad_points < 1:
        raise InvalidParameterError("n and quad_points must be positive")
    cols = np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int8)
    f = adv.batch(cols, None)
    ones = (cols == 1).sum(axis=1)
    # f-mass per number of +1 entries; the rest of the integrand depends only on that count
    weight = np.bincount(ones, weights=f, minlength=n + 1)

    half = math.log(5 * n)
    t = -half + (np.arange(quad_points) + 0.5) * (2 * half / quad_points)
    p = np.tanh(t / 2.0)[:, None]
    k = np.arange(n + 1)[None, :]
    prob = ((1 + p) / 2) ** k * ((1 - p) / 2) ** (n - k)
    integrand = (weight[None, :] * (2 * k - n - n * p) * prob).sum(axis=1)
    return float(integrand.mean())
