"""Contract operators and the rules that combine evidence for them."""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

from .evidence import (
    CheckerRefused, DomainSpec, Evidence, EvidenceKind, OutcomeCache, ProofCertificate,
    ProofChecker, RefinementWitness, TestJob, check_formula_on_domain, default_workers,
    select_scenes, tally, testing_evidence, testing_meta, verify_proof,
)
from .lang import ast as A
from .lang.contract import Contract, statically_decidable
from .lang.render import format_number
from .lang.simplify import simplify
from .stats import ProbBound, TestingOutcome, round_down
from .traces import Component, Scenario

__all__ = [
    "op_compose", "op_conjoin", "op_strong_merge", "op_weak_merge", "refinement_formula",
    "RefinementWitness", "Counterexample", "RefinementError", "IndependenceError",
    "StaticDecidabilityError", "check_refinement", "refine", "combine_union",
    "combine_weak_merge", "weak_merge_tested", "split_static", "product_confidence",
]


# -- operators ---------------------------------------------------------------

def compose_formulas(a1, g1, a2, g2):
    """Composition: a trace satisfies the result iff it satisfies both inputs."""
    a = A.Or(A.Or(A.And(a1, a2), A.And(a1, A.Not(g1))), A.And(a2, A.Not(g2)))
    return a, _joint_guarantee(a1, g1, a2, g2)


def conjoin_formulas(a1, g1, a2, g2):
    return A.Or(a1, a2), _joint_guarantee(a1, g1, a2, g2)


def _joint_guarantee(a1, g1, a2, g2):
    return A.Or(A.And(A.Implies(a1, g1), A.Implies(a2, g2)), A.And(A.Not(a1), A.Not(a2)))


def strong_merge_formulas(a1, g1, a2, g2):
    return A.And(a1, a2), A.Or(A.Or(A.And(g1, g2), A.Not(a1)), A.Not(a2))


def weak_merge_formulas(a1, g1, a2, g2):
    either = A.Or(a1, a2)
    return either, A.Or(A.Or(g1, g2), A.Not(either))


def _apply(formulas, symbol, c1: Contract, c2: Contract, name: Optional[str]) -> Contract:
    a, g = formulas(c1.assumptions, c1.guarantees, c2.assumptions, c2.guarantees)
    return Contract(name or f"({c1.name} {symbol} {c2.name})", simplify(a), simplify(g))


def op_compose(c1: Contract, c2: Contract, name: str | None = None) -> Contract:
    return _apply(compose_formulas, "||", c1, c2, name)


def op_conjoin(c1: Contract, c2: Contract, name: str | None = None) -> Contract:
    return _apply(conjoin_formulas, "&", c1, c2, name)


def op_strong_merge(c1: Contract, c2: Contract, name: str | None = None) -> Contract:
    return _apply(strong_merge_formulas, "*", c1, c2, name)


def op_weak_merge(c1: Contract, c2: Contract, name: str | None = None) -> Contract:
    return _apply(weak_merge_formulas, "><", c1, c2, name)


OPERATORS = {
    "compose": (op_compose, EvidenceKind.COMPOSED),
    "conjoin": (op_conjoin, EvidenceKind.CONJOINED),
    "strong_merge": (op_strong_merge, EvidenceKind.STRONG_MERGED),
}


# -- refinement --------------------------------------------------------------

class RefinementError(ValueError):
    pass


@dataclass(frozen=True)
class Counterexample:
    """A trace on which the refinement condition is false."""
    rows: list

    def describe(self) -> str:
        steps = ["{" + ", ".join(f"{k}={format_number(v)}" for k, v in sorted(r.items())) + "}"
                 for r in self.rows]
        return " -> ".join(steps)


def refinement_formula(c1: Contract, c2: Contract) -> A.Formula:
    """True on a trace iff the trace is consistent with C1 refining C2."""
    return A.And(A.Implies(c2.assumptions, c1.assumptions),
                 A.Implies(c1.body, c2.body))


def refinement_contract(c1: Contract, c2: Contract) -> Contract:
    """The refinement condition packaged as a contract, for external checkers."""
    return Contract(f"{c1.name} <= {c2.name}", A.TRUE, refinement_formula(c1, c2))


def check_refinement(c1: Contract, c2: Contract, method: str, *,
                     domain: DomainSpec | None = None, derive: Callable | None = None,
                     node_budget: int = 1_000_000, checker: ProofChecker | None = None,
                     certificate: ProofCertificate | None = None):
    """Establish C1 <= C2; returns a RefinementWitness or a Counterexample.

    Syntactic compares the simplified pairs structurally. ExhaustiveFiniteDomain
    checks the refinement condition on every trace of ``domain``.
    ExternalCertificate hands the condition to ``checker`` with ``certificate``.
    Raises RefinementError when a method cannot establish the claim and has no
    trace to show, and CheckerRefused when the domain exceeds the budget.
    """
    if method == "Syntactic":
        same = (simplify(c1.assumptions) == simplify(c2.assumptions)
                and simplify(c1.guarantees) == simplify(c2.guarantees))
        if not same:
            raise RefinementError(f"{c1.name!r} and {c2.name!r} are not syntactically identical")
        return RefinementWitness("Syntactic", c1.hash, c2.hash, {"scope": "identical formulas"})
    if method == "ExhaustiveFiniteDomain":
        if domain is None:
            raise RefinementError("ExhaustiveFiniteDomain needs a domain")
        cex = check_formula_on_domain(refinement_formula(c1, c2), domain, derive, node_budget)
        if cex is not None:
            return Counterexample(cex)
        return RefinementWitness("ExhaustiveFiniteDomain", c1.hash, c2.hash,
                                 {"scope": domain.describe(), "domain": domain.to_json()})
    if method == "ExternalCertificate":
        if checker is None or certificate is None:
            raise RefinementError("ExternalCertificate needs a checker and a certificate")
        target = refinement_contract(c1, c2)
        ev = verify_proof(certificate, checker, target)
        if ev.bound.p != 1.0:
            raise RefinementError(f"checker {checker.id!r} did not accept: {ev.meta.get('diagnostic', '')}")
        return RefinementWitness("ExternalCertificate", c1.hash, c2.hash,
                                 {"checker_id": checker.id, "certificate_id": certificate.id,
                                  "payload_hash": certificate.payload_hash,
                                  "scope": ev.meta.get("scope", "")})
    raise RefinementError(f"unknown refinement method {method!r}")


def refine(e1: Evidence, witness: RefinementWitness, c2: Contract) -> Evidence:
    """Carry E1's bound over to C2 (refinement preserves the bound)."""
    if not isinstance(witness, RefinementWitness):
        raise RefinementError("refinement needs a RefinementWitness (got a counterexample?)")
    if witness.source != e1.contract.hash or witness.target != c2.hash:
        raise RefinementError(
            f"witness is for {witness.source} <= {witness.target}, "
            f"not {e1.contract.hash} <= {c2.hash}")
    return Evidence(EvidenceKind.REFINED, c2, e1.bound, children=(e1,), witness=witness)


# -- combination rules -------------------------------------------------------

class IndependenceError(ValueError):
    def __init__(self, shared):
        self.shared = sorted(shared, key=repr)
        super().__init__("evidence is not independent; shared provenance: "
                         + ", ".join(repr(k) for k in self.shared))


def check_independent(*evidence: Evidence) -> None:
    seen, shared = set(), set()
    for e in evidence:
        for key in e.provenance_keys():
            if key in seen:
                shared.add(key)
            seen.add(key)
    if shared:
        raise IndependenceError(shared)


def product_confidence(c1: float, c2: float) -> float:
    return round_down(Fraction(c1) * Fraction(c2))


def combine_union(e1: Evidence, e2: Evidence, op: str, name: str | None = None) -> Evidence:
    """Union bound: (max(0, p1 + p2 - 1), c1 c2) for compose/conjoin/strong_merge."""
    if op not in OPERATORS:
        raise ValueError(f"unknown operator {op!r}; expected one of {sorted(OPERATORS)}")
    check_independent(e1, e2)
    fn, kind = OPERATORS[op]
    p = round_down(max(Fraction(0), Fraction(e1.p) + Fraction(e2.p) - 1))
    bound = ProbBound(p, product_confidence(e1.c, e2.c))
    return Evidence(kind, fn(e1.contract, e2.contract, name), bound, children=(e1, e2))


def combine_weak_merge(e1: Evidence, e2: Evidence, p_a1: float, p_a1_source: str,
                       name: str | None = None) -> Evidence:
    """Mixture rule: p1 P(A1) + p2 (1 - P(A1)) at confidence c1 c2.

    ``e1`` must hold on the distribution conditioned on A1 and ``e2`` on the
    one conditioned on not A1; test leaves record this as a sampling
    condition. ``p_a1_source`` states where P(A1) comes from.
    """
    if not p_a1_source or not p_a1_source.strip():
        raise ValueError("P(A1) needs a stated source")
    if not 0.0 <= p_a1 <= 1.0:
        raise ValueError("P(A1) must lie in [0, 1]")
    for e in (e1, e2):
        for leaf in e.leaves():
            if leaf.kind is EvidenceKind.TEST and "condition" not in leaf.meta:
                raise ValueError(f"test evidence for {leaf.contract.name!r} lacks a sampling condition")
    check_independent(e1, e2)
    q = Fraction(p_a1)
    p = round_down(Fraction(e1.p) * q + Fraction(e2.p) * (1 - q))
    bound = ProbBound(p, product_confidence(e1.c, e2.c))
    return Evidence(EvidenceKind.WEAK_MERGED, op_weak_merge(e1.contract, e2.contract, name), bound,
                    children=(e1, e2), meta={"p_a1": p_a1, "p_a1_source": p_a1_source})


class StaticDecidabilityError(ValueError):
    pass


def split_static(c1: Contract, c2: Contract, scene_vars) -> A.Formula:
    """The part of A1 that decides the partition from the initial scene.

    Conjuncts shared with A2 are left out: a trace violating one of them
    violates both assumptions and satisfies the weak merge vacuously.
    """
    shared = set(A.conjuncts(c2.assumptions))
    own = [f for f in A.conjuncts(c1.assumptions) if f not in shared]
    bad = [f for f in own if not statically_decidable(f, scene_vars)]
    if bad:
        raise StaticDecidabilityError(
            "assumption conjunct(s) of the proved contract depend on more than the initial scene; "
            "use combine_weak_merge instead")
    return A.conjoin_all(own)


def weak_merge_tested(certificate: ProofCertificate, checker: ProofChecker, c1: Contract,
                      c2: Contract, scenario: Scenario, component: Component, n: int, c: float,
                      seed: int, stream: str = "default", workers: int | None = None,
                      cache: OutcomeCache | None = None, budget_unit: str = "samples",
                      name: str | None = None, proved_component: str = "") -> Evidence:
    """Testing-based weak merge: proof for C1, testing for C2 on the rest.

    Scenes whose initial state satisfies A1 count as satisfying without
    simulation; the others are simulated and checked against C2.
    """
    static = split_static(c1, c2, scenario.scene_vars)
    merged = op_weak_merge(c1, c2, name)
    proof = verify_proof(certificate, checker, c1, component=proved_component)
    job = TestJob(scenario, component, c2, seed, stream, static=static)
    meta = testing_meta(job, n, c, budget_unit)
    if proof.bound.p != 1.0:
        return Evidence(EvidenceKind.WEAK_MERGE_TESTED, merged, ProbBound(0.0, c),
                        children=(proof,), meta=meta, outcome=TestingOutcome())
    workers = default_workers() if workers is None else workers
    t0 = time.perf_counter()
    results = select_scenes(job, n, budget_unit, workers, cache)
    outcome = tally(results, time.perf_counter() - t0)
    return testing_evidence(merged, outcome, c, meta,
                            kind=EvidenceKind.WEAK_MERGE_TESTED, children=(proof,))
