import math
from decimal import Decimal
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from probcontracts.stats import (
    ProbBound, TestingOutcome, binomial_upper_tail, clopper_pearson_lower,
    clopper_pearson_two_sided, exact_tail_oracle, oracle_lower_bound, round_down,
)


def test_zero_successes_give_zero():
    assert clopper_pearson_lower(0, 10, 0.95) == 0.0


def test_all_successes_closed_form():
    assert clopper_pearson_lower(10, 10, 0.95) == pytest.approx(0.05 ** (1 / 10), abs=1e-9)
    assert clopper_pearson_lower(10, 10, 0.95) == pytest.approx(0.7411, abs=1e-4)


def test_bound_is_below_the_closed_form_root():
    # rounding is one-sided: never above the exact root
    for n in (1, 7, 50, 400):
        assert clopper_pearson_lower(n, n, 0.99) <= 0.01 ** (1 / n)


def test_naive_perception_counters():
    p = clopper_pearson_lower(3374, 3594, 0.999)
    assert abs(p - oracle_lower_bound(3374, 3594, 0.999, tol=1e-12)) < 1e-9
    mean = 3374 / 3594
    assert round(mean * 100, 2) == 93.88
    assert 0 < mean - p < 0.02
    assert f"{p * 100:.2f}" == "92.55"


def test_optimized_counters_give_the_printed_minimum():
    assert f"{clopper_pearson_lower(5322, 5519, 0.999) * 100:.2f}" == "95.59"


@pytest.mark.parametrize("k,n,c", [(-1, 5, 0.9), (6, 5, 0.9), (1, 0, 0.9), (1, 5, 1.0), (1, 5, 0.0)])
def test_domain_errors(k, n, c):
    with pytest.raises(ValueError):
        clopper_pearson_lower(k, n, c)


def test_exact_tail_small_cases():
    assert exact_tail_oracle(0, 7, 0.3) == 1
    assert exact_tail_oracle(1, 2, Fraction(1, 2)) == Decimal("0.75")
    with pytest.raises(ValueError):
        exact_tail_oracle(3, 2, 0.5)


def test_tail_matches_oracle():
    for n in (3, 30, 120):
        for k in range(0, n + 1, max(1, n // 7)):
            for p in (0.01, 0.3, 0.77, 0.99):
                assert binomial_upper_tail(k, n, p) == pytest.approx(float(exact_tail_oracle(k, n, p)),
                                                                      rel=1e-9, abs=1e-15)


def test_production_matches_oracle_on_a_grid():
    for n in (1, 2, 9, 40, 137, 200):
        for k in sorted({0, 1, n // 3, n // 2, n - 1, n}):
            for c in (0.9, 0.99, 0.999):
                assert abs(clopper_pearson_lower(k, n, c) - oracle_lower_bound(k, n, c)) < 1e-6


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 300), st.data())
def test_monotone_in_k_and_c(n, data):
    k = data.draw(st.integers(0, n - 1))
    assert clopper_pearson_lower(k, n, 0.95) <= clopper_pearson_lower(k + 1, n, 0.95)
    assert clopper_pearson_lower(k, n, 0.99) <= clopper_pearson_lower(k, n, 0.9)


def test_converges_towards_the_ratio():
    gaps = [0.9 - clopper_pearson_lower(int(0.9 * n), n, 0.95) for n in (10, 100, 1000, 10000)]
    assert all(a > b for a, b in zip(gaps, gaps[1:])) and gaps[-1] < 0.01


@pytest.mark.parametrize("q", [0.5, 0.9, 0.99])
@pytest.mark.parametrize("n", [50, 500])
def test_simulated_coverage(q, n):
    rng = np.random.default_rng(int(q * 1000) + n)
    ks = rng.binomial(n, q, size=2000)
    table = {k: clopper_pearson_lower(int(k), n, 0.95) for k in set(ks.tolist())}
    covered = np.mean([table[k] <= q for k in ks.tolist()])
    assert covered >= 0.95 - 0.01


def test_two_sided_interval_contains_the_one_sided_bound():
    lo, hi = clopper_pearson_two_sided(3374, 3594, 0.999)
    assert lo < clopper_pearson_lower(3374, 3594, 0.999) < 3374 / 3594 < hi


def test_round_down_never_rounds_up():
    x = Fraction(1, 3)
    assert Fraction(round_down(x)) <= x
    assert round_down(Fraction(1, 2)) == 0.5
    assert Fraction(round_down(Fraction(999, 1000) * Fraction(999, 1000))) <= Fraction(998001, 10 ** 6)


def test_prob_bound_validation():
    assert ProbBound(1, 1).as_tuple() == (1.0, 1.0)
    for bad in (-0.1, 1.1, math.nan):
        with pytest.raises(ValueError):
            ProbBound(bad, 0.5)


def test_outcome_bookkeeping_for_the_partitioned_check():
    o = TestingOutcome.from_partition(sampled=6329, rejected=810, static_pass=1876,
                                      tested_verified=3446, g_violated=197)
    assert (o.k, o.n_effective) == (5322, 5519)
    assert f"{float(o.mean_correctness) * 100:.2f}" == "96.43"
    assert o.tested.k == 3446 and o.tested.n_effective == 3643


def test_outcome_invariants():
    with pytest.raises(ValueError):
        TestingOutcome(n_sampled=3, n_verified=1)
    with pytest.raises(ValueError):
        TestingOutcome(n_sampled=1, n_verified=1, n_static_pass=2)
    o = TestingOutcome(n_sampled=4, n_rejected=1, n_verified=1, n_a_violated=1, n_g_violated=1)
    assert o.k == 2 and o.n_effective == 3
    assert TestingOutcome.from_json(o.to_json()) == o
    assert o.merge(o).n_sampled == 8
