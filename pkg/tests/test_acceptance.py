"""One test per acceptance criterion; each prints a PASS/FAIL line.

Run ``python tests/test_acceptance.py --regen-golden`` to rewrite the golden
assurance case after an intentional rendering change.
"""
import itertools
import json
import random
import sys
import time
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

import numpy as np

from probcontracts.aeb.campaign import known_scene_fraction, run_campaign
from probcontracts.aeb.dynamics import SAFE_GAP, AebParams
from probcontracts.aeb.model import AebScenario, simulate_gaps
from probcontracts.aeb.reachability import reachable_check
from probcontracts.algebra import (
    combine_union, op_compose, op_conjoin, op_strong_merge, op_weak_merge,
)
from probcontracts.assurance import export_json, render_case
from probcontracts.evidence import OutcomeCache, verify_assumption
from probcontracts.lang import Contract, evaluate, parse_formula, reference_eval, satisfies
from probcontracts.lang import ast as A
from probcontracts.lang.semantics import TableTrace
from probcontracts.stats import (
    TestingOutcome, clopper_pearson_lower, exact_tail_oracle, oracle_lower_bound,
)
from probcontracts.traces import DYNAMICS_PURPOSE, SCENE_PURPOSE, substream

import conftest
from gen import rand_formula, rand_trace

GOLDEN = Path(__file__).parent / "golden" / "naive_seed7_n300_case.txt"
GOLDEN_RUN = dict(mode="naive", budget=300, seed=7)


def report(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    conftest.ACCEPTANCE.append((n, line))
    print(line)
    assert ok, line


def leaf(name, p, c):
    return verify_assumption(Contract(name, "true", f"always ({name} > 0)"), p, c, name)


# 1 -------------------------------------------------------------------------

def test_criterion_1_union_arithmetic():
    pairs = [((0.9255, 0.999), (0.99, 0.999), 0.9155), ((0.9559, 0.999), (0.99, 0.999), 0.9459)]
    ok, worst, details = True, 0.0, []
    for i, ((p1, c1), (p2, c2), want) in enumerate(pairs):
        e1, e2 = leaf(f"a{i}", p1, c1), leaf(f"b{i}", p2, c2)
        t0 = time.perf_counter()
        e = combine_union(e1, e2, "compose")
        worst = max(worst, time.perf_counter() - t0)
        ok &= abs(e.p - want) <= 1e-12 and abs(e.c - 0.998001) <= 1e-12
        details.append(f"({e.p:.12f}, {e.c:.12f})")
    ok &= worst < 1e-3
    report(1, ok, f"{', '.join(details)}; slowest {worst * 1e3:.3f} ms")


# 2 -------------------------------------------------------------------------

def test_criterion_2_partitioned_bookkeeping():
    o = TestingOutcome.from_partition(sampled=6329, rejected=810, static_pass=1876,
                                      tested_verified=3446, g_violated=197)
    mean = float(o.mean_correctness) * 100
    ok = o.k == 5322 and o.n_effective == 5519 and abs(mean - 96.43) <= 0.01
    report(2, ok, f"k={o.k}, n_eff={o.n_effective}, mean correctness {mean:.4f}%")


# 3 -------------------------------------------------------------------------

def _root_within(k, n, c, p, tol=1e-6):
    """The exact Clopper-Pearson root lies within ``tol`` of ``p``.

    The upper tail P(X >= k) increases with the success probability, so the
    root is bracketed by the two exact tail values.
    """
    if k == 0:
        return p == 0.0
    alpha = 1 - Decimal(c)
    lo, hi = max(0.0, p - tol), min(1.0, p + tol)
    return exact_tail_oracle(k, n, lo) <= alpha <= exact_tail_oracle(k, n, hi)


def test_criterion_3_clopper_pearson():
    t0 = time.perf_counter()
    bad = []
    cases = 0
    for n in range(1, 201):
        for k in range(n + 1):
            for c in (0.9, 0.99, 0.999):
                cases += 1
                if not _root_within(k, n, c, clopper_pearson_lower(k, n, c)):
                    bad.append((k, n, c))
    # full bisections on a sample, as a check of the bracketing shortcut
    rng = random.Random(3)
    for _ in range(60):
        n = rng.randint(1, 200)
        k, c = rng.randint(0, n), rng.choice((0.9, 0.99, 0.999))
        if abs(clopper_pearson_lower(k, n, c) - oracle_lower_bound(k, n, c)) > 1e-6:
            bad.append((k, n, c))
    coverage = []
    for q in (0.5, 0.9, 0.99):
        for n in (50, 500):
            ks = np.random.default_rng(int(q * 1000) + n).binomial(n, q, size=2000).tolist()
            table = {k: clopper_pearson_lower(k, n, 0.95) for k in set(ks)}
            coverage.append(float(np.mean([table[k] <= q for k in ks])))
    secs = time.perf_counter() - t0
    ok = not bad and min(coverage) >= 0.94 and secs < 60
    report(3, ok, f"{cases} grid cases, {len(bad)} disagreements; min coverage {min(coverage):.4f} "
                  f"at c=0.95; {secs:.1f} s")


# 4 -------------------------------------------------------------------------

def test_criterion_4_evaluator_oracle():
    rng = random.Random(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(10_000):
        f = rand_formula(rng, 5)
        tr = rand_trace(rng, max_len=8)
        if evaluate(f, tr) != [reference_eval(f, tr, t) for t in range(len(tr))]:
            mismatches += 1
    secs = time.perf_counter() - t0
    report(4, mismatches == 0 and secs < 30, f"10000 cases, {mismatches} mismatches, {secs:.1f} s")


# 5 -------------------------------------------------------------------------

def _kleene_and(a, b):
    if a is False or b is False:
        return False
    return None if a is None or b is None else True


def _kleene_not(a):
    return None if a is None else not a


def _implies(a, b):
    return _kleene_not(_kleene_and(a, _kleene_not(b)))


def _direct(op, a1, g1, a2, g2):
    """Satisfaction of the combined contract from the parts, per operator definition."""
    or_ = lambda x, y: _kleene_not(_kleene_and(_kleene_not(x), _kleene_not(y)))  # noqa: E731
    if op in ("compose", "conjoin"):
        return _kleene_and(_implies(a1, g1), _implies(a2, g2))
    if op == "strong_merge":
        return _implies(_kleene_and(a1, a2), _kleene_and(g1, g2))
    return _implies(or_(a1, a2), or_(g1, g2))


OPS = {"compose": op_compose, "conjoin": op_conjoin, "strong_merge": op_strong_merge,
       "weak_merge": op_weak_merge}


def _toy_traces():
    rows = [{"a": a, "b": b} for a, b in itertools.product((0, 1), repeat=2)]
    return [TableTrace(list(seq)) for seq in itertools.product(rows, repeat=3)]


def _prob(contract, traces, weights):
    return sum(w for t, w in zip(traces, weights) if satisfies(t, contract).satisfied)


def test_criterion_5_operator_semantics():
    t0 = time.perf_counter()
    rng = random.Random(55)
    mismatches = {op: 0 for op in OPS}
    for _ in range(10_000):
        c1 = Contract("C1", rand_formula(rng, 2), rand_formula(rng, 2))
        c2 = Contract("C2", rand_formula(rng, 2), rand_formula(rng, 2))
        tr = rand_trace(rng, missing=0.0)
        parts = [evaluate(f, tr)[0] for f in (c1.assumptions, c1.guarantees, c2.assumptions, c2.guarantees)]
        for op, fn in OPS.items():
            want = _direct(op, *parts)
            if want is not None and satisfies(tr, fn(c1, c2)).satisfied != want:
                mismatches[op] += 1

    traces = _toy_traces()
    atoms = [parse_formula(s) for s in ("a", "b", "always a", "eventually b", "next a", "a until b",
                                        "not a", "always (a or b)")]
    law_failures = []
    for trial in range(200):
        weights = [Fraction(rng.randint(1, 6)) for _ in traces]
        total = sum(weights)
        weights = [w / total for w in weights]
        c1 = Contract("C1", rng.choice(atoms + [A.TRUE]), rng.choice(atoms))
        c2 = Contract("C2", rng.choice(atoms + [A.TRUE]), rng.choice(atoms))
        joint = sum(w for t, w in zip(traces, weights)
                    if satisfies(t, c1).satisfied and satisfies(t, c2).satisfied)
        p1, p2 = _prob(c1, traces, weights), _prob(c2, traces, weights)
        # joint-probability identities for composition and conjunction
        for op in ("compose", "conjoin"):
            if _prob(OPS[op](c1, c2), traces, weights) != joint:
                law_failures.append((trial, op, "identity"))
        # union-bound rules
        for op in ("compose", "conjoin", "strong_merge"):
            if _prob(OPS[op](c1, c2), traces, weights) < p1 + p2 - 1:
                law_failures.append((trial, op, "union"))
        # mixture rule, conditioning on A1 of the first contract
        a1 = c1.assumptions
        on = [evaluate(a1, t)[0] is True for t in traces]
        q = sum(w for w, s in zip(weights, on) if s)
        if 0 < q < 1:
            q1 = sum(w for t, w, s in zip(traces, weights, on) if s and satisfies(t, c1).satisfied) / q
            q2 = sum(w for t, w, s in zip(traces, weights, on)
                     if not s and satisfies(t, c2).satisfied) / (1 - q)
            if _prob(op_weak_merge(c1, c2), traces, weights) < q1 * q + q2 * (1 - q):
                law_failures.append((trial, "weak_merge", "mixture"))
    secs = time.perf_counter() - t0
    ok = not any(mismatches.values()) and not law_failures and secs < 60
    report(5, ok, f"mismatches per operator {mismatches} over 10000 traces; "
                  f"{len(law_failures)} law failures on 200 toy distributions of 64 traces; {secs:.1f} s")


# 6 -------------------------------------------------------------------------

def test_criterion_6_safety_filter():
    t0 = time.perf_counter()
    reach = reachable_check()
    scen = AebScenario(AebParams(sensors_in_band=True))
    episodes = violations = 0
    for i in range(100_000):
        gaps = simulate_gaps(scen, substream(6, "safety", i, SCENE_PURPOSE),
                             substream(6, "safety", i, DYNAMICS_PURPOSE))
        if gaps is None:
            continue
        episodes += 1
        if min(gaps) <= SAFE_GAP:
            violations += 1
    secs = time.perf_counter() - t0
    ok = reach.safe and violations == 0 and secs < 600
    report(6, ok, f"reachability: {reach.describe()}; {episodes} simulated episodes of 100000 draws, "
                  f"{violations} violations; {secs:.0f} s")


# 7 -------------------------------------------------------------------------

def test_criterion_7_end_to_end_dominance():
    t0 = time.perf_counter()
    rows, ok = [], True
    for seed in (1, 2, 3):
        cache = OutcomeCache()
        for budget in (500, 1000, 5000):
            naive = run_campaign("naive", budget, seed, cache=cache)
            opt = run_campaign("optimized", budget, seed, cache=cache)
            ok &= opt.evidence.p >= naive.evidence.p
            ok &= abs(naive.evidence.c - 0.998001) <= 1e-12 and abs(opt.evidence.c - 0.998001) <= 1e-12
            rows.append(f"s{seed}/n{budget}: {naive.evidence.p:.4f}<={opt.evidence.p:.4f}")
    fractions = [known_scene_fraction(seed, n=10_000) for seed in (1, 2, 3)]
    ok &= all(abs(f - 0.35) <= 0.02 for f in fractions)
    secs = time.perf_counter() - t0
    ok &= secs < 900
    report(7, ok, f"{'; '.join(rows)}; static fractions {[round(f, 4) for f in fractions]}; {secs:.0f} s")


# 8 -------------------------------------------------------------------------

def test_criterion_8_worker_determinism():
    outs = {}
    for mode in ("naive", "optimized"):
        a = export_json(run_campaign(mode, 300, 11, workers=1).evidence)
        b = export_json(run_campaign(mode, 300, 11, workers=4).evidence)
        outs[mode] = a == b
    report(8, all(outs.values()), f"byte-identical evidence JSON with 1 and 4 workers: {outs}")


# 9 -------------------------------------------------------------------------

def golden_case() -> str:
    return render_case(run_campaign(**GOLDEN_RUN).evidence)


def test_criterion_9_golden_case():
    text = golden_case()
    want = GOLDEN.read_text() if GOLDEN.exists() else None
    lines = text.splitlines()
    sections = {s: any(l.strip().startswith(s) for l in lines)
                for s in ("Minimum", "Assumptions:", "Guarantees:", "Evidence:")}
    counters = any("Verified," in l and "Rejected," in l and "G-Violated" in l for l in lines)
    ok = text == want and all(sections.values()) and counters
    report(9, ok, f"golden match {text == want}; sections {sections}; counter line {counters}")


if __name__ == "__main__":
    if "--regen-golden" in sys.argv:
        GOLDEN.parent.mkdir(exist_ok=True)
        GOLDEN.write_text(golden_case())
        print(f"wrote {GOLDEN}")
