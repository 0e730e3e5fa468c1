"""End-to-end attack: code -> PAP (-> k-copy embedding) -> mechanism -> extract -> trace."""

from __future__ import annotations

import copy
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

import numpy as np

from papcode import fp_code
from papcode.errors import InvalidParameterError
from papcode.fp_code import TraceResult
from papcode.pap import (
    MarkedColumns,
    Permutation,
    extract,
    k_copy_embed,
    padding_plan,
    pap_transform,
    strongly_agrees,
)
from papcode.reductions import WeaklyAccurateMechanism

TASKS = ("averaging", "clustering", "svd", "raw")


@dataclass(frozen=True)
class AttackConfig:
    n0: int
    beta: float
    alpha: float
    k: int = 1
    lam: float = 1.0
    task: str = "raw"
    trials: int = 200
    seed: int | None = None
    d0_override: int | None = None
    z: float | None = None
    xi: float | None = None
    workers: int = 1

    def __post_init__(self):
        if self.n0 < 1 or self.k < 1 or self.trials < 1 or self.workers < 1:
            raise InvalidParameterError("n0, k, trials and workers must be positive")
        if not 0 < self.alpha <= 1:
            raise InvalidParameterError("alpha must lie in (0, 1]")
        if not 0 < self.beta <= 1:
            raise InvalidParameterError("beta must lie in (0, 1]")
        if self.task not in TASKS:
            raise InvalidParameterError(f"task must be one of {TASKS}")

    @property
    def d0(self) -> int:
        if self.d0_override is not None:
            return self.d0_override
        return fp_code.code_length(self.n0, self.beta)

    @property
    def proven_regime(self) -> bool:
        return self.d0 >= fp_code.code_length(self.n0, self.beta)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class PreparedInstance:
    """Everything the tracer knows plus the matrix handed to the mechanism."""

    codebook: fp_code.Codebook
    key: fp_code.TraceKey
    perm: Permutation
    slot: int
    rows_per_block: int
    matrix: np.ndarray
    slot_marked: MarkedColumns

    @property
    def slot_block(self) -> np.ndarray:
        n0 = self.rows_per_block
        return self.matrix[self.slot * n0 : (self.slot + 1) * n0]


@dataclass(frozen=True)
class AttackOutcome:
    result: TraceResult
    coalition_hit: bool
    agreement_observed: bool


def _radius(p: float, trials: int) -> float:
    return 1.96 * math.sqrt(p * (1 - p) / trials)


@dataclass(frozen=True)
class LeakageReport:
    trials: int
    trace_success_rate: float
    false_accusation_rate: float
    no_accusation_rate: float
    agreement_rate: float
    outcomes: tuple = field(default=(), repr=False, compare=False)

    @classmethod
    def from_outcomes(cls, outcomes: Sequence[AttackOutcome]) -> "LeakageReport":
        t = len(outcomes)
        hits = sum(o.coalition_hit for o in outcomes)
        none = sum(not o.result.accused for o in outcomes)
        agree = sum(o.agreement_observed for o in outcomes)
        return cls(
            trials=t,
            trace_success_rate=hits / t,
            false_accusation_rate=(t - hits - none) / t,
            no_accusation_rate=none / t,
            agreement_rate=agree / t,
            outcomes=tuple(outcomes),
        )

    @property
    def rates(self) -> dict:
        return {
            "trace_success": self.trace_success_rate,
            "false_accusation": self.false_accusation_rate,
            "no_accusation": self.no_accusation_rate,
            "agreement": self.agreement_rate,
        }

    @property
    def ci95(self) -> dict:
        """Normal-approximation 95% radii for each rate."""
        return {k: _radius(v, self.trials) for k, v in self.rates.items()}

    def to_dict(self, config: AttackConfig, runtime_seconds: float | None = None) -> dict:
        return {
            "config": config.to_dict(),
            "rates": self.rates,
            "ci95": self.ci95,
            "runtime_seconds": runtime_seconds,
        }

    def csv_rows(self) -> list[dict]:
        return [
            {
                "trial": i,
                "accused": "" if o.result.user is None else o.result.user + 1,
                "coalition_hit": int(o.coalition_hit),
                "agreement": int(o.agreement_observed),
            }
            for i, o in enumerate(self.outcomes)
        ]


def prepare_instance(config: AttackConfig, rng) -> PreparedInstance:
    """Sample the code, pad and permute it, and embed it among decoys when k > 1."""
    codebook, key = fp_code.generate(config.n0, config.beta, rng, d_override=config.d0)
    plan = padding_plan(config.alpha, d0=codebook.d)
    inst = pap_transform(codebook.matrix, plan.pad_len, rng=rng)
    slot = int(rng.integers(config.k))
    if config.k == 1:
        matrix = inst.padded
    else:
        matrix = k_copy_embed(inst.padded, slot, config.k, plan.pad_len, plan.d0, rng)
    marked = inst.marked_columns(codebook.matrix)
    return PreparedInstance(codebook, key, inst.perm, slot, config.n0, matrix, marked)


def _mechanisms(mech) -> tuple:
    return tuple(mech) if isinstance(mech, (tuple, list)) else (mech,)


def attack_prepared(mech, prepared: PreparedInstance, rng) -> AttackOutcome:
    """Run ``mech`` (or each of a tuple of mechanisms) and trace the extracted answer.

    With several mechanisms the first accusation wins, matching a tracer that
    tries every candidate output in turn.
    """
    d0 = prepared.codebook.d
    result = fp_code.NO_ACCUSATION
    agreed = False
    for m in _mechanisms(mech):
        w = m(prepared.matrix, rng)
        agreed = agreed or strongly_agrees(w, None, marked=prepared.slot_marked)
        if not result.accused:
            result = fp_code.trace(prepared.codebook, prepared.key, extract(w, prepared.perm, d0))
    # the coalition is the whole codebook, so any accusation lands inside it
    hit = result.accused and 0 <= result.user < prepared.codebook.n
    return AttackOutcome(result=result, coalition_hit=hit, agreement_observed=agreed)


def _trial_rngs(rng):
    instance_rng, mech_rng = rng.spawn(2)
    return instance_rng, mech_rng


def run_attack(mech, config: AttackConfig, rng) -> AttackOutcome:
    instance_rng, mech_rng = _trial_rngs(rng)
    return attack_prepared(mech, prepare_instance(config, instance_rng), mech_rng)


def _check_rows(mechs, config: AttackConfig):
    for m in mechs:
        if isinstance(m, WeaklyAccurateMechanism) and m.k != config.k:
            raise InvalidParameterError(f"mechanism expects k={m.k}, config has k={config.k}")


def compare_leakage(
    mechs: Mapping[str, object], config: AttackConfig, rng
) -> dict[str, LeakageReport]:
    """Attack several mechanisms on the same sampled instances.

    Each report equals what ``estimate_leakage`` would give for that
    mechanism alone with the same ``rng`` state; instances are simply built
    once per trial.
    """
    for m in mechs.values():
        _check_rows(_mechanisms(m), config)
    trial_rngs = rng.spawn(config.trials)

    def one(trial_rng):
        instance_rng, mech_rng = _trial_rngs(trial_rng)
        prepared = prepare_instance(config, instance_rng)
        return {
            name: attack_prepared(m, prepared, copy.deepcopy(mech_rng))
            for name, m in mechs.items()
        }

    if config.workers > 1:
        with ThreadPoolExecutor(config.workers) as pool:
            per_trial = list(pool.map(one, trial_rngs))
    else:
        per_trial = [one(r) for r in trial_rngs]
    return {
        name: LeakageReport.from_outcomes([t[name] for t in per_trial]) for name in mechs
    }


def estimate_leakage(mech, config: AttackConfig, rng) -> LeakageReport:
    return compare_leakage({"mech": mech}, config, rng)["mech"]
