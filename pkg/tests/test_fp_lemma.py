import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from papcode.errors import BudgetExceededError, ContractViolationError, InvalidParameterError
from papcode.fp_lemma import (
    DETERMINISTIC_BATTERY,
    EstimateReport,
    LemmaAdversary,
    estimate_lemma_expectation,
    lemma_bound,
    lemma_statistic,
    majority_adversary,
    named_adversary,
    noisy_adversary,
    oracle_lemma_expectation,
)
from papcode.hard_dist import bias_density, bias_limit

IDENTITY_N1 = (4 / 3) / math.log(5)  # 0.8284465794128157


def _p_space_oracle(adv, n):
    """Same expectation, integrated in p with scipy and the density directly."""
    cols = np.array(list(itertools.product((-1, 1), repeat=n)), dtype=np.int8)
    f = adv.batch(cols, None)
    ones = (cols == 1).sum(axis=1)
    sums = cols.sum(axis=1)

    def integrand(p):
        prob = ((1 + p) / 2) ** ones * ((1 - p) / 2) ** (n - ones)
        return float(np.sum(f * (sums - n * p) * prob)) * bias_density(p, n)

    lim = bias_limit(n)
    val, _ = integrate.quad(integrand, -lim, lim, epsabs=1e-12, limit=200)
    return val


def test_bound_values():
    assert lemma_bound(1) == pytest.approx(0.6213349345596119, abs=1e-15)
    assert lemma_bound(3) == pytest.approx(0.36926937306885504, abs=1e-15)
    assert lemma_bound(3, robust=True) == pytest.approx(0.14770774922754204, abs=1e-15)


def test_statistic_example():
    assert lemma_statistic(0.5, [1, -1], 0.2) == pytest.approx(-0.2)


@given(
    f=st.floats(-1, 1),
    p=st.floats(-1, 1),
    col=st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=20),
)
def test_statistic_range(f, p, col):
    n = len(col)
    assert -2 * n <= lemma_statistic(f, col, p) <= 2 * n


def test_statistic_rejects_bad_inputs():
    with pytest.raises(InvalidParameterError):
        lemma_statistic(1.5, [1], 0.0)
    with pytest.raises(InvalidParameterError):
        lemma_statistic(0.5, [], 0.0)


def test_report_pass_logic():
    assert EstimateReport(1.0, 0.1, 10, 0.6).passes
    assert not EstimateReport(0.8, 0.1, 10, 0.6).passes
    assert EstimateReport(0.8, 0.1, 10, 0.6).lower == pytest.approx(0.5)


def test_oracle_identity_closed_form():
    adv = named_adversary("identity")
    assert oracle_lemma_expectation(adv, 1) == pytest.approx(IDENTITY_N1, abs=1e-4)


def test_identity_equals_boundary_forced_function():
    forced = LemmaAdversary(lambda x, rng: 1.0 if x[0] == 1 else -1.0, "forced")
    assert oracle_lemma_expectation(forced, 1) == oracle_lemma_expectation(
        named_adversary("identity"), 1
    )


@pytest.mark.parametrize("name", sorted(DETERMINISTIC_BATTERY))
@pytest.mark.parametrize("n", [1, 2, 3, 5])
def test_oracle_matches_p_space_integral(name, n):
    adv = named_adversary(name)
    assert oracle_lemma_expectation(adv, n) == pytest.approx(_p_space_oracle(adv, n), abs=1e-6)


def test_oracle_converges():
    adv = majority_adversary()
    a = oracle_lemma_expectation(adv, 4, quad_points=1000)
    b = oracle_lemma_expectation(adv, 4, quad_points=20000)
    assert abs(a - b) < 1e-5


def test_oracle_budget():
    with pytest.raises(BudgetExceededError):
        oracle_lemma_expectation(majority_adversary(), 13)


def test_oracle_rejects_randomized():
    with pytest.raises(InvalidParameterError):
        oracle_lemma_expectation(noisy_adversary(majority_adversary()), 2)


def test_monte_carlo_identity(rng):
    rep = estimate_lemma_expectation(named_adversary("identity"), 1, 100_000, rng)
    assert abs(rep.mean - IDENTITY_N1) <= 3 * rep.stderr
    assert rep.bound == pytest.approx(lemma_bound(1))


@pytest.mark.parametrize("name", sorted(DETERMINISTIC_BATTERY))
@pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
def test_bound_holds_for_battery(name, n):
    rep = estimate_lemma_expectation(named_adversary(name), n, 100_000, np.random.default_rng(n))
    assert rep.passes, (name, n, rep)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 8, 16])
def test_robust_bound(n):
    adv = named_adversary("noisy-majority")
    rep = estimate_lemma_expectation(adv, n, 100_000, np.random.default_rng(100 + n))
    assert rep.bound == pytest.approx(lemma_bound(n, robust=True))
    assert rep.passes


def test_estimate_deterministic():
    adv = named_adversary("noisy-majority")
    a = estimate_lemma_expectation(adv, 3, 5000, np.random.default_rng(1))
    b = estimate_lemma_expectation(adv, 3, 5000, np.random.default_rng(1))
    assert a == b


def test_chunking_matches_single_pass():
    adv = majority_adversary()
    a = estimate_lemma_expectation(adv, 3, 10_000, np.random.default_rng(5), chunk=10_000)
    b = estimate_lemma_expectation(adv, 3, 10_000, np.random.default_rng(5), chunk=10_000)
    assert a.mean == b.mean
    c = estimate_lemma_expectation(adv, 3, 10_000, np.random.default_rng(5), chunk=999)
    assert c.trials == 10_000
    assert abs(c.mean - a.mean) < 6 * a.stderr


def test_stderr_is_unbiased_std_over_sqrt_n():
    adv = LemmaAdversary(lambda x, rng: x[:, 0].astype(float), "d", vectorized=True)
    rep = estimate_lemma_expectation(adv, 1, 2000, np.random.default_rng(3), chunk=300)
    assert rep.trials == 2000
    assert 0 < rep.stderr < 1


def test_out_of_range_adversary(rng):
    bad = LemmaAdversary(lambda x, rng: 2.0, "bad")
    with pytest.raises(ContractViolationError):
        estimate_lemma_expectation(bad, 2, 10, rng)


def test_rejects_single_trial(rng):
    with pytest.raises(InvalidParameterError):
        estimate_lemma_expectation(majority_adversary(), 2, 1, rng)


def test_unknown_adversary():
    with pytest.raises(InvalidParameterError):
        named_adversary("nope")


def test_majority_ties_to_plus():
    adv = majority_adversary()
    assert adv.batch(np.array([[1, -1]]), None).tolist() == [1.0]
