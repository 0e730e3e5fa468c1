"""A simple fingerprinting code built on the hard distribution.

``generate`` draws a codebook plus a reference row ``z`` that is handed to
the tracer.  ``trace`` accuses the first user whose correlation with the
answer beats the reference row's by more than ``0.2 d / (n ln 5n)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from papcode.errors import InvalidParameterError
from papcode.hard_dist import sample_instance

DEFAULT_LENGTH_CONSTANT = 200.0


@dataclass(frozen=True)
class Codebook:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.int8)
        if m.ndim != 2 or m.size == 0:
            raise InvalidParameterError("codebook must be a non-empty 2-D matrix")
        if not np.all(np.abs(m) == 1):
            raise InvalidParameterError("codebook entries must be +1 or -1")
        object.__setattr__(self, "matrix", m)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def d(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class TraceKey:
    reference: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "reference", np.asarray(self.reference, dtype=np.int8))

    @property
    def d(self) -> int:
        return len(self.reference)


@dataclass(frozen=True)
class TraceResult:
    """Outcome of tracing: ``user`` is a 0-based row index, or None for no accusation."""

    user: int | None = None

    @property
    def accused(self) -> bool:
        return self.user is not None

    def __str__(self):
        return "NO_ACCUSATION" if self.user is None else f"ACCUSED {self.user + 1}"


NO_ACCUSATION = TraceResult(None)


def code_length(n: int, beta: float, c: float = DEFAULT_LENGTH_CONSTANT) -> int:
    """``ceil(c * n^2 * ln^2(20n) * ln(20n/beta))``."""
    if not 0 < beta <= 1:
        raise InvalidParameterError(f"beta must lie in (0, 1], got {beta}")
    if n < 1 or c <= 0:
        raise InvalidParameterError("n and c must be positive")
    return math.ceil(c * n * n * math.log(20 * n) ** 2 * math.log(20 * n / beta))


def generate(n: int, beta: float, rng, d_override: int | None = None) -> tuple[Codebook, TraceKey]:
    d = code_length(n, beta) if d_override is None else d_override
    inst = sample_instance(n, d, rng)
    return Codebook(inst.codebook), TraceKey(inst.reference)


def trace_threshold(n: int, d: int) -> float:
    return 0.2 * d / (n * math.log(5 * n))


def scores(codebook: Codebook, key: TraceKey, answer) -> np.ndarray:
    """Per-user ``<x_i, q> - <z, q>``."""
    q = np.asarray(answer, dtype=float)
    if q.shape != (codebook.d,) or key.d != codebook.d:
        raise InvalidParameterError(
            f"answer length {q.shape} and key length {key.d} must equal d={codebook.d}"
        )
    return codebook.matrix @ q - float(key.reference @ q)


def trace(codebook: Codebook, key: TraceKey, answer) -> TraceResult:
    q = np.asarray(answer, dtype=float)
    if np.any(np.abs(q) > 1):
        raise InvalidParameterError("answer entries must lie in [-1, 1]")
    hits = np.flatnonzero(scores(codebook, key, q) > trace_threshold(codebook.n, codebook.d))
    return TraceResult(int(hits[0])) if hits.size else NO_ACCUSATION


def is_feasible(codebook: Codebook, coalition: Iterable[int], answer) -> bool:
    """True iff every coordinate of ``answer`` appears in some coalition row."""
    rows = sorted(set(coalition))
    if not rows:
        raise InvalidParameterError("coalition must be non-empty")
    if rows[0] < 0 or rows[-1] >= codebook.n:
        raise InvalidParameterError("coalition index out of range")
    q = np.asarray(answer)
    if q.shape != (codebook.d,):
        raise InvalidParameterError("answer length must equal d")
    return bool(np.all(np.any(codebook.matrix[rows] == q, axis=0)))


def coalition_majority(codebook: Codebook, coalition: Iterable[int]) -> np.ndarray:
    """Entrywise majority of the coalition rows, ties to +1."""
    rows = sorted(set(coalition))
    if not rows:
        raise InvalidParameterError("coalition must be non-empty")
    s = codebook.matrix[rows].sum(axis=0, dtype=np.int64)
    return np.where(s >= 0, 1, -1).astype(np.int8)


# -- flat-file format ---------------------------------------------------------
# line 1: "n d seed" (seed is "none" when unseeded); n codeword lines; one key line

def _row(v) -> str:
    return " ".join("1" if x == 1 else "-1" for x in v)


def write_codebook(path, codebook: Codebook, key: TraceKey, seed: int | None = None) -> None:
    lines = [f"{codebook.n} {codebook.d} {'none' if seed is None else seed}"]
    lines.extend(_row(r) for r in codebook.matrix)
    lines.append(_row(key.reference))
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_row(line: str, d: int) -> np.ndarray:
    v = np.array(line.split(), dtype=np.int8)
    if v.shape != (d,):
        raise InvalidParameterError(f"expected {d} entries, got {v.size}")
    return v


def read_codebook(path) -> tuple[Codebook, TraceKey, int | None]:
    lines = Path(path).read_text().splitlines()
    try:
        n_s, d_s, seed_s = lines[0].split()
        n, d = int(n_s), int(d_s)
    except (IndexError, ValueError):
        raise InvalidParameterError(f"{path}: malformed header") from None
    if len(lines) != n + 2:
        raise InvalidParameterError(f"{path}: expected {n + 2} lines, found {len(lines)}")
    matrix = np.stack([_parse_row(l, d) for l in lines[1 : n + 1]])
    key = TraceKey(_parse_row(lines[n + 1], d))
    seed = None if seed_s == "none" else int(seed_s)
    return Codebook(matrix), key, seed
