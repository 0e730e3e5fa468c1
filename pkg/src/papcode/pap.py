"""Marked columns, strong agreement, and the padding-and-permuting transform.

Column indices are 0-based throughout.  A permutation is stored as an index
array ``forward`` where ``forward[i]`` is the position that source column
``i`` occupies after permuting; matrices are never materialized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from papcode.errors import InfeasiblePaddingError, InvalidParameterError
from papcode.hard_dist import sample_instance

AGREEMENT_FRACTION = 0.9


@dataclass(frozen=True)
class MarkedColumns:
    plus: np.ndarray
    minus: np.ndarray

    def for_sign(self, b: int) -> np.ndarray:
        return self.plus if b == 1 else self.minus


@dataclass(frozen=True)
class Permutation:
    forward: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.forward)
        if f.ndim != 1 or not np.issubdtype(f.dtype, np.integer):
            raise InvalidParameterError("permutation must be a 1-D integer array")
        seen = np.zeros(len(f), dtype=bool)
        if len(f) and (f.min() < 0 or f.max() >= len(f)):
            raise InvalidParameterError("permutation entries out of range")
        seen[f] = True
        if not seen.all():
            raise InvalidParameterError("permutation is not a bijection")
        object.__setattr__(self, "forward", f)

    def __len__(self):
        return len(self.forward)

    @classmethod
    def identity(cls, d: int) -> "Permutation":
        return cls(np.arange(d))

    @classmethod
    def _trusted(cls, forward: np.ndarray) -> "Permutation":
        # skips the O(d) bijection check for permutations built here
        obj = cls.__new__(cls)
        object.__setattr__(obj, "forward", forward)
        return obj

    @property
    def inverse(self) -> np.ndarray:
        inv = np.empty_like(self.forward)
        inv[self.forward] = np.arange(len(self.forward), dtype=self.forward.dtype)
        return inv

    def apply(self, matrix: np.ndarray) -> np.ndarray:
        """Move column ``i`` of ``matrix`` to column ``forward[i]``."""
        matrix = np.asarray(matrix)
        out = np.empty_like(matrix)
        out[..., self.forward] = matrix
        return out


@dataclass(frozen=True)
class PapInstance:
    padded: np.ndarray
    perm: Permutation
    pad_len: int
    original_width: int

    @property
    def d(self) -> int:
        return self.original_width + 2 * self.pad_len

    def marked_columns(self, source) -> MarkedColumns:
        """Marked columns of ``padded`` given the source matrix it was built from.

        Same sets as ``marked_columns(self.padded)`` (unsorted), read off the
        permutation instead of scanning all ``d`` columns.
        """
        f = self.perm.forward
        d0, pad = self.original_width, self.pad_len
        code = marked_columns(source)
        return MarkedColumns(
            plus=np.concatenate([f[d0 : d0 + pad], f[code.plus]]),
            minus=np.concatenate([f[d0 + pad :], f[code.minus]]),
        )


@dataclass(frozen=True)
class PaddingPlan:
    pad_len: int
    d0: int
    d: int


@dataclass(frozen=True)
class CorrelationReport:
    columns: np.ndarray
    signs: np.ndarray
    frequencies: np.ndarray
    repetitions: int

    @property
    def verdict(self) -> bool:
        return bool(np.all(self.frequencies >= AGREEMENT_FRACTION))


def _index_dtype(d: int):
    # int32 indices halve memory on very wide padded matrices
    return np.int32 if d < 2**31 else np.int64


def _as_pm1(X) -> np.ndarray:
    X = np.asarray(X)
    if X.ndim != 2 or X.size == 0:
        raise InvalidParameterError("expected a non-empty 2-D matrix")
    return X


def _column_sums(X: np.ndarray) -> np.ndarray:
    # row-by-row accumulation in the narrowest safe dtype; much faster than
    # a strided axis-0 reduction when there are few, very long rows
    n = X.shape[0]
    dtype = np.int8 if n < 2**7 else np.int16 if n < 2**15 else np.int64
    if not np.issubdtype(X.dtype, np.integer) or n > 64:
        return X.sum(axis=0, dtype=dtype if np.issubdtype(X.dtype, np.integer) else None)
    s = X[0].astype(dtype)
    for row in X[1:]:
        s += row
    return s


def marked_columns(X) -> MarkedColumns:
    X = _as_pm1(X)
    n = X.shape[0]
    s = _column_sums(X)
    idx = _index_dtype(X.shape[1])
    return MarkedColumns(
        plus=np.flatnonzero(s == n).astype(idx), minus=np.flatnonzero(s == -n).astype(idx)
    )


def strongly_agrees(q, X, marked: MarkedColumns | None = None) -> bool:
    """``q`` matches at least 90% of the +1-marked and of the -1-marked columns.

    An empty marked set is satisfied vacuously.  ``marked`` may be passed to
    reuse a previous ``marked_columns(X)``.
    """
    q = np.asarray(q)
    if marked is None:
        X = _as_pm1(X)
        if q.shape != (X.shape[1],):
            raise InvalidParameterError("q length must equal the number of columns")
        marked = marked_columns(X)
    for b in (1, -1):
        cols = marked.for_sign(b)
        hits = int(np.count_nonzero(q[cols] == b))
        if 10 * hits < 9 * len(cols):
            return False
    return True


def _ceil(x: float) -> int:
    # tolerate float noise such as 100/(2*0.5) landing a hair above an integer
    return math.ceil(x - 1e-9 * max(1.0, abs(x)))


def padding_plan(alpha: float, d0: int | None = None, d: int | None = None) -> PaddingPlan:
    """Padding length from the code width ``d0`` or from the total width ``d``.

    From ``d0``: ``pad = ceil(d0 / (2 alpha))``.  From ``d``:
    ``pad = ceil((1 - alpha) d / 2)`` and ``d0 = d - 2 pad``.
    """
    if not 0 < alpha <= 1:
        raise InvalidParameterError(f"alpha must lie in (0, 1], got {alpha}")
    if (d0 is None) == (d is None):
        raise InvalidParameterError("give exactly one of d0 and d")
    if d0 is not None:
        if d0 < 1:
            raise InvalidParameterError("d0 must be positive")
        pad = _ceil(d0 / (2 * alpha))
        return PaddingPlan(pad, d0, d0 + 2 * pad)
    pad = _ceil((1 - alpha) * d / 2)
    if d - 2 * pad < 1:
        raise InfeasiblePaddingError(f"alpha={alpha} leaves no code columns out of d={d}")
    return PaddingPlan(pad, d - 2 * pad, d)


def _random_bits(count: int, rng) -> np.ndarray:
    raw = np.frombuffer(rng.bytes((count + 7) // 8), dtype=np.uint8)
    return np.unpackbits(raw)[:count].astype(bool)


def random_pap_permutation(d0: int, pad_len: int, rng) -> Permutation:
    """Random column permutation for a PAP instance of width ``d0 + 2 pad_len``.

    Code columns land on a uniformly random ordered set of positions and the
    remaining positions are split uniformly into the +1 and -1 padding.  The
    pad columns within one sign keep increasing order: they are identical, so
    the padded matrix and the extraction have exactly the law they would have
    under a uniform permutation, at a fraction of the cost for large ``d``.
    """
    d = d0 + 2 * pad_len
    idx = _index_dtype(d)
    code_pos = rng.choice(d, size=d0, replace=False, shuffle=True).astype(idx)
    if pad_len == 0:
        return Permutation._trusted(code_pos)
    free = np.ones(d, dtype=bool)
    free[code_pos] = False
    # fair bits on the free slots, then a uniform fix-up of the surplus; the result is
    # exchangeable over free slots, hence a uniform pad_len-subset
    plus = _random_bits(d, rng)
    plus &= free
    surplus = int(np.count_nonzero(plus)) - pad_len
    if surplus:
        pool = plus if surplus > 0 else free & ~plus
        plus[_uniform_from_mask(pool, abs(surplus), rng)] = surplus < 0
    minus = free
    minus &= ~plus
    return Permutation._trusted(
        np.concatenate(
            [code_pos, np.flatnonzero(plus).astype(idx), np.flatnonzero(minus).astype(idx)]
        )
    )


def _uniform_from_mask(mask: np.ndarray, count: int, rng) -> np.ndarray:
    """``count`` distinct indices drawn uniformly from the True entries of ``mask``."""
    total = int(np.count_nonzero(mask))
    if count > total:
        raise InvalidParameterError("not enough candidates")
    if 4 * count > total:
        return rng.choice(np.flatnonzero(mask), size=count, replace=False)
    chosen = np.empty(0, dtype=np.int64)
    while len(chosen) < count:
        draw = rng.integers(0, len(mask), size=2 * (count - len(chosen)) + 16)
        draw = draw[mask[draw]]
        # keep first occurrences in draw order so the accepted sequence stays uniform
        merged = np.concatenate([chosen, draw])
        _, first = np.unique(merged, return_index=True)
        chosen = merged[np.sort(first)]
    return chosen[:count]


def random_permutation(d: int, rng) -> Permutation:
    return Permutation._trusted(rng.permutation(d))


def pap_transform(X, pad_len: int, perm: Permutation | None = None, rng=None) -> PapInstance:
    """Append ``pad_len`` all-(+1) then ``pad_len`` all-(-1) columns, then permute.

    Draws ``random_pap_permutation`` from ``rng`` when ``perm`` is omitted.
    """
    X = _as_pm1(X)
    n, d0 = X.shape
    if pad_len < 0:
        raise InvalidParameterError("pad_len must be non-negative")
    d = d0 + 2 * pad_len
    if perm is None:
        if rng is None:
            raise InvalidParameterError("need a permutation or an rng")
        perm = random_pap_permutation(d0, pad_len, rng)
    if len(perm) != d:
        raise InvalidParameterError(f"permutation size {len(perm)} != {d}")
    f = perm.forward
    template = np.full(d, -1, dtype=np.int8)
    template[f[d0 : d0 + pad_len]] = 1
    padded = np.tile(template, (n, 1))
    padded[:, f[:d0]] = X
    return PapInstance(padded=padded, perm=perm, pad_len=pad_len, original_width=d0)


def extract(q_full, perm: Permutation, d0: int) -> np.ndarray:
    """Undo the permutation and keep the first ``d0`` coordinates."""
    q_full = np.asarray(q_full)
    if q_full.shape != (len(perm),):
        raise InvalidParameterError("q length must equal the permutation size")
    if not 1 <= d0 <= len(perm):
        raise InvalidParameterError("d0 out of range")
    return q_full[perm.forward[:d0]]


def strong_correlation_estimate(
    black_box: Callable, X, repetitions: int, rng
) -> CorrelationReport:
    """Run ``black_box(X, rng)`` repeatedly; per marked column, how often it hits the mark."""
    if repetitions < 1:
        raise InvalidParameterError("repetitions must be positive")
    X = _as_pm1(X)
    marked = marked_columns(X)
    cols = np.concatenate([marked.plus, marked.minus])
    signs = np.concatenate(
        [np.ones(len(marked.plus), dtype=np.int8), -np.ones(len(marked.minus), dtype=np.int8)]
    )
    hits = np.zeros(len(cols), dtype=np.int64)
    for _ in range(repetitions):
        q = np.asarray(black_box(X, rng))
        hits += q[cols] == signs
    return CorrelationReport(cols, signs, hits / repetitions, repetitions)


def k_copy_embed(Y, slot: int, k: int, pad_len: int, d0: int, rng) -> np.ndarray:
    """Stack ``k`` blocks: ``Y`` at block ``slot`` (0-based), fresh PAP decoys elsewhere."""
    Y = _as_pm1(Y)
    n0, d = Y.shape
    if k < 1 or not 0 <= slot < k:
        raise InvalidParameterError(f"slot {slot} out of range for k={k}")
    if d != d0 + 2 * pad_len:
        raise InvalidParameterError(f"Y width {d} != d0 + 2*pad_len = {d0 + 2 * pad_len}")
    out = np.empty((k * n0, d), dtype=np.int8)
    for t in range(k):
        block = slice(t * n0, (t + 1) * n0)
        if t == slot:
            out[block] = Y
        else:
            decoy = sample_instance(n0, d0, rng).codebook
            out[block] = pap_transform(decoy, pad_len, rng=rng).padded
    return out
