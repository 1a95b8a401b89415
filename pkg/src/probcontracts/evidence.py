"""Base verification procedures: testing, proof checking, and assumptions.

Each procedure returns an Evidence node carrying a ProbBound for a contract.
Combined nodes are built by ``probcontracts.algebra``.
"""
from __future__ import annotations

import enum
import hashlib
import itertools
import json
import multiprocessing
import os
import subprocess
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Mapping, Optional, Sequence

from .lang import ast as A
from .lang.contract import Contract, MissingVariableError, Outcome, satisfies
from .lang.jsonform import formula_from_json, formula_to_json
from .lang.render import format_number
from .lang.semantics import TableTrace, evaluate, evaluate_single_steps
from .stats import ProbBound, TestingOutcome, clopper_pearson_lower
from .traces import (
    DYNAMICS_PURPOSE, REJECTED, SCENE_PURPOSE, Component, Scenario, Trace,
    TraceAborted, run_trace, substream,
)

WORKERS_ENV = "PROBCONTRACTS_WORKERS"


class EvidenceKind(str, enum.Enum):
    TEST = "Test"
    PROOF = "Proof"
    ASSUMPTION = "Assumption"
    REFINED = "Refined"
    COMPOSED = "Composed"
    CONJOINED = "Conjoined"
    STRONG_MERGED = "StrongMerged"
    WEAK_MERGED = "WeakMerged"
    WEAK_MERGE_TESTED = "WeakMergeTested"


COMBINED_KINDS = frozenset({EvidenceKind.COMPOSED, EvidenceKind.CONJOINED,
                            EvidenceKind.STRONG_MERGED, EvidenceKind.WEAK_MERGED})


@dataclass(frozen=True)
class ProofCertificate:
    id: str
    target: str          # hash of the contract the certificate is about
    checker_id: str
    payload: Any         # JSON-compatible data or bytes

    @property
    def payload_hash(self) -> str:
        if isinstance(self.payload, (bytes, bytearray)):
            blob = bytes(self.payload)
        else:
            blob = json.dumps(self.payload, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_json(self) -> dict:
        payload = self.payload
        if isinstance(payload, (bytes, bytearray)):
            payload = {"bytes_hex": bytes(payload).hex()}
        return {"id": self.id, "target": self.target, "checker_id": self.checker_id,
                "payload": payload, "payload_hash": self.payload_hash}

    @classmethod
    def from_json(cls, d: dict) -> "ProofCertificate":
        payload = d["payload"]
        if isinstance(payload, dict) and set(payload) == {"bytes_hex"}:
            payload = bytes.fromhex(payload["bytes_hex"])
        return cls(d["id"], d["target"], d["checker_id"], payload)


@dataclass(frozen=True)
class RefinementWitness:
    """How C1 <= C2 was established: method, the pair, and the scope of the check."""
    method: str          # "Syntactic" | "ExhaustiveFiniteDomain" | "ExternalCertificate"
    source: str          # hash of C1
    target: str          # hash of C2
    detail: Mapping = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"method": self.method, "source": self.source, "target": self.target,
                "detail": dict(self.detail)}

    @classmethod
    def from_json(cls, d: dict) -> "RefinementWitness":
        return cls(d["method"], d["source"], d["target"], dict(d.get("detail", {})))


@dataclass(frozen=True)
class Evidence:
    kind: EvidenceKind
    contract: Contract
    bound: ProbBound
    children: tuple = ()
    meta: Mapping = field(default_factory=dict)
    outcome: Optional[TestingOutcome] = None
    witness: Optional[RefinementWitness] = None
    certificate: Optional[ProofCertificate] = None

    __hash__ = None

    def __post_init__(self):
        object.__setattr__(self, "kind", EvidenceKind(self.kind))
        object.__setattr__(self, "children", tuple(self.children))
        k = self.kind
        if k in (EvidenceKind.TEST, EvidenceKind.WEAK_MERGE_TESTED) and self.outcome is None:
            raise ValueError(f"{k.value} evidence needs a TestingOutcome")
        if k is EvidenceKind.PROOF and "certificate_id" not in self.meta:
            raise ValueError("Proof evidence needs a certificate id")
        if k is EvidenceKind.ASSUMPTION and not self.meta.get("justification"):
            raise ValueError("Assumption evidence needs a justification")
        if k in COMBINED_KINDS and len(self.children) != 2:
            raise ValueError(f"{k.value} evidence combines exactly two children")
        if k is EvidenceKind.REFINED and (len(self.children) != 1 or self.witness is None):
            raise ValueError("Refined evidence has one child and a refinement witness")

    @property
    def p(self) -> float:
        return self.bound.p

    @property
    def c(self) -> float:
        return self.bound.c

    def leaves(self):
        if not self.children:
            yield self
        for ch in self.children:
            yield from ch.leaves()

    def provenance_keys(self) -> list:
        """Sources of randomness or unverified belief this node depends on.

        Proofs and certain (1, 1) assumptions are facts and may be reused
        freely; everything else must appear at most once in a combined tree.
        """
        keys = []
        if self.kind in (EvidenceKind.TEST, EvidenceKind.WEAK_MERGE_TESTED):
            keys.append(("test", self.meta["scenario_hash"], self.meta["seed"], self.meta["stream"]))
        elif self.kind is EvidenceKind.ASSUMPTION and self.bound.as_tuple() != (1.0, 1.0):
            keys.append(("assumption", self.contract.hash, self.meta["justification"]))
        for ch in self.children:
            keys.extend(ch.provenance_keys())
        return keys

    def to_json(self) -> dict:
        return {
            "kind": self.kind.value,
            "contract": contract_to_json(self.contract),
            "bound": {"p": self.bound.p, "c": self.bound.c},
            "children": [ch.to_json() for ch in self.children],
            "meta": dict(self.meta),
            "outcome": None if self.outcome is None else self.outcome.to_json(),
            "witness": None if self.witness is None else self.witness.to_json(),
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Evidence":
        try:
            kind = EvidenceKind(d["kind"])
        except ValueError:
            raise ValueError(f"unknown evidence kind {d.get('kind')!r}") from None
        return cls(
            kind=kind,
            contract=contract_from_json(d["contract"]),
            bound=ProbBound(d["bound"]["p"], d["bound"]["c"]),
            children=tuple(cls.from_json(ch) for ch in d.get("children", [])),
            meta=dict(d.get("meta", {})),
            outcome=None if d.get("outcome") is None else TestingOutcome.from_json(d["outcome"]),
            witness=None if d.get("witness") is None else RefinementWitness.from_json(d["witness"]),
            certificate=None if d.get("certificate") is None else ProofCertificate.from_json(d["certificate"]),
        )


def contract_to_json(c: Contract) -> dict:
    return {"name": c.name, "hash": c.hash,
            "assumptions": formula_to_json(c.assumptions),
            "guarantees": formula_to_json(c.guarantees)}


def contract_from_json(d: dict) -> Contract:
    c = Contract(d["name"], formula_from_json(d["assumptions"]), formula_from_json(d["guarantees"]))
    if "hash" in d and d["hash"] != c.hash:
        raise ValueError(f"contract {c.name!r}: stored hash does not match its formulas")
    return c


# -- assumptions -------------------------------------------------------------

def verify_assumption(contract: Contract, p: float, c: float, justification: str,
                      component: str = "") -> Evidence:
    """Evidence taken on trust; rendered as unverified by this tool."""
    if not justification or not justification.strip():
        raise ValueError("an assumption needs a justification")
    meta = {"justification": justification}
    if component:
        meta["component"] = component
    return Evidence(EvidenceKind.ASSUMPTION, contract, ProbBound(p, c), meta=meta)


# -- proof checking ----------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    accepted: bool
    scope: str = ""
    diagnostic: str = ""
    counterexample: Optional[list] = None

    def __bool__(self):
        return self.accepted


class CheckerRefused(RuntimeError):
    """The checker declines to decide (for instance, the domain is too large)."""


class ProofChecker:
    id = "checker"

    def check(self, certificate: ProofCertificate, contract: Contract) -> CheckResult:
        raise NotImplementedError


@dataclass(frozen=True)
class DomainSpec:
    """Finite trace domain: a value grid per variable and a length bound.

    Variables listed in ``constant`` keep one value along a trace; the others
    may change at every step. ``component`` names a function known to the
    checker, ``derive(row, prev_row)``, that adds the component's port values
    to each step given that step's inputs and the previous completed step.
    """
    grids: Mapping[str, tuple]
    length: int = 1
    constant: frozenset = frozenset()
    component: Optional[str] = None

    def __post_init__(self):
        grids = {k: tuple(Fraction(v) for v in vals) for k, vals in self.grids.items()}
        object.__setattr__(self, "grids", grids)
        object.__setattr__(self, "constant", frozenset(self.constant))
        if not grids:
            raise ValueError("empty domain: no variable grids")
        empty = [k for k, v in grids.items() if not v]
        if empty:
            raise ValueError(f"empty grid for {empty}")
        if self.length < 1:
            raise ValueError("length bound must be at least 1")

    def size(self) -> int:
        """Total number of trace steps the enumeration visits."""
        const = 1
        dyn = 1
        for k, vals in self.grids.items():
            if k in self.constant:
                const *= len(vals)
            else:
                dyn *= len(vals)
        return sum(const * dyn ** n * n for n in range(1, self.length + 1))

    def describe(self) -> str:
        parts = []
        for k in sorted(self.grids):
            vals = self.grids[k]
            if len(vals) > 4:
                steps = {b - a for a, b in zip(vals, vals[1:])}
                step = f" step {format_number(steps.pop())}" if len(steps) == 1 else ""
                parts.append(f"{k} in [{format_number(min(vals))}, {format_number(max(vals))}]{step} "
                             f"({len(vals)} values)")
            else:
                parts.append(f"{k} in {{{', '.join(format_number(v) for v in vals)}}}")
        comp = f", via {self.component}" if self.component else ""
        return f"traces of length <= {self.length}{comp}; " + "; ".join(parts)

    def to_json(self) -> dict:
        return {
            "grids": {k: [format_number(v) for v in vals] for k, vals in sorted(self.grids.items())},
            "length": self.length,
            "constant": sorted(self.constant),
            "component": self.component,
        }

    @classmethod
    def from_json(cls, d: dict) -> "DomainSpec":
        return cls({k: tuple(Fraction(v) for v in vals) for k, vals in d["grids"].items()},
                   d.get("length", 1), frozenset(d.get("constant", ())), d.get("component"))


def enumerate_domain(domain: DomainSpec, derive: Optional[Callable] = None):
    """Yield each trace of the domain as a list of per-step variable maps."""
    const_keys = sorted(k for k in domain.grids if k in domain.constant)
    dyn_keys = sorted(k for k in domain.grids if k not in domain.constant)
    dyn_rows = [dict(zip(dyn_keys, vals)) for vals in itertools.product(*(domain.grids[k] for k in dyn_keys))]
    for cvals in itertools.product(*(domain.grids[k] for k in const_keys)):
        base = dict(zip(const_keys, cvals))
        for n in range(1, domain.length + 1):
            for seq in itertools.product(dyn_rows, repeat=n):
                rows = []
                for r in seq:
                    row = {**base, **r}
                    if derive is not None:
                        row.update(derive(row, rows[-1] if rows else None))
                    rows.append(row)
                yield rows


def check_formula_on_domain(formula: A.Formula, domain: DomainSpec,
                            derive: Optional[Callable] = None, node_budget: int = 1_000_000):
    """Return None if ``formula`` is never False on the domain, else a counterexample.

    Length-one traces are evaluated in bulk; longer ones one at a time.
    """
    if domain.size() > node_budget:
        raise CheckerRefused(f"domain has {domain.size()} trace steps, budget is {node_budget}")
    if domain.length == 1:
        rows = [seq[0] for seq in enumerate_domain(domain, derive)]
        vals = evaluate_single_steps(formula, TableTrace(rows))
        for row, v in zip(rows, vals):
            if v is False:
                return [row]
        return None
    for rows in enumerate_domain(domain, derive):
        if evaluate(formula, TableTrace(rows))[0] is False:
            return rows
    return None


class ExhaustiveChecker(ProofChecker):
    """Accepts when ``A implies G`` is never false on a finite trace domain.

    The certificate payload is a DomainSpec in JSON form. The guarantee only
    covers that domain, and the scope string says so.
    """

    def __init__(self, components: Mapping[str, Callable] | None = None,
                 node_budget: int = 1_000_000, id: str = "exhaustive-grid"):
        self.components = dict(components or {})
        self.node_budget = node_budget
        self.id = id

    def certificate(self, contract: Contract, domain: DomainSpec, cert_id: str | None = None) -> ProofCertificate:
        payload = domain.to_json()
        cid = cert_id or f"grid-{contract.hash[:8]}"
        return ProofCertificate(cid, contract.hash, self.id, payload)

    def check(self, certificate, contract):
        domain = DomainSpec.from_json(certificate.payload)
        derive = None
        if domain.component is not None:
            if domain.component not in self.components:
                return CheckResult(False, domain.describe(), f"unknown component {domain.component!r}")
            derive = self.components[domain.component]
        missing = contract.signature - set(domain.grids)
        if derive is None and missing:
            return CheckResult(False, domain.describe(), f"no grid for {sorted(missing)}")
        cex = check_formula_on_domain(contract.body, domain, derive, self.node_budget)
        if cex is None:
            return CheckResult(True, domain.describe())
        shown = [{k: format_number(v) for k, v in sorted(r.items())} for r in cex]
        return CheckResult(False, domain.describe(), "counterexample found", shown)


class ExternalChecker(ProofChecker):
    """Runs a command; contract and certificate go to stdin as JSON.

    The checker accepts iff the process exits 0 and the first line of stdout
    is the contract's hash.
    """

    def __init__(self, id: str, command: Sequence[str], timeout: float = 30.0):
        self.id = id
        self.command = list(command)
        self.timeout = timeout

    def check(self, certificate, contract):
        request = json.dumps({
            "contract": contract_to_json(contract),
            "contract_hash": contract.hash,
            "certificate": certificate.to_json(),
        }, sort_keys=True)
        scope = f"external checker {' '.join(self.command)}"
        try:
            proc = subprocess.run(self.command, input=request, capture_output=True, text=True,
                                  timeout=self.timeout)
        except subprocess.TimeoutExpired:
            return CheckResult(False, scope, f"timed out after {self.timeout}s")
        except OSError as exc:
            return CheckResult(False, scope, f"could not start checker: {exc}")
        lines = proc.stdout.splitlines()
        echoed = lines[0].strip() if lines else ""
        if proc.returncode != 0:
            return CheckResult(False, scope, f"exit status {proc.returncode}")
        if echoed != contract.hash:
            return CheckResult(False, scope, f"checker echoed {echoed!r}, expected {contract.hash}")
        return CheckResult(True, scope)


def verify_proof(certificate: ProofCertificate, checker: ProofChecker, contract: Contract,
                 component: str = "") -> Evidence:
    """(1, 1) if the checker accepts the certificate for this contract, else (0, 1)."""
    meta = {"certificate_id": certificate.id, "checker_id": checker.id}
    if component:
        meta["component"] = component
    accepted, scope, diag = False, "", ""
    if certificate.target != contract.hash:
        diag = f"certificate targets contract {certificate.target}, not {contract.hash}"
    elif certificate.checker_id != checker.id:
        diag = f"certificate is for checker {certificate.checker_id!r}, not {checker.id!r}"
    else:
        try:
            res = checker.check(certificate, contract)
            accepted, scope, diag = bool(res.accepted), res.scope, res.diagnostic
        except CheckerRefused as exc:
            diag = f"checker refused: {exc}"
        except Exception as exc:  # a crashing checker never yields a proof
            diag = f"checker failed: {type(exc).__name__}: {exc}"
    meta["scope"] = scope
    if diag:
        meta["diagnostic"] = diag
    bound = ProbBound(1.0, 1.0) if accepted else ProbBound(0.0, 1.0)
    return Evidence(EvidenceKind.PROOF, contract, bound, meta=meta, certificate=certificate)


# -- testing -----------------------------------------------------------------

@dataclass(frozen=True)
class TestJob:
    """Everything needed to classify scene ``i`` of a seeded testing run.

    ``static`` is a scene-level formula: scenes satisfying it are counted as
    passing without simulation. ``condition`` restricts sampling to scenes
    satisfying it (others are skipped and not counted).
    """
    __test__ = False

    scenario: Scenario
    component: Component
    contract: Contract
    seed: int
    stream: str
    static: Optional[A.Formula] = None
    condition: Optional[A.Formula] = None
    log: bool = False

    def key(self) -> tuple:
        return (self.scenario.hash, self.component.identity(), self.contract.hash,
                None if self.static is None else json.dumps(formula_to_json(self.static), sort_keys=True),
                None if self.condition is None else json.dumps(formula_to_json(self.condition), sort_keys=True),
                self.seed, self.stream)


def _scene_holds(f: A.Formula, scene) -> Optional[bool]:
    return evaluate(f, TableTrace([scene.values]))[0]


def classify_scene(job: TestJob, index: int) -> tuple:
    """Return (index, category, simulated steps, log records)."""
    scene = job.scenario.sample_scene(substream(job.seed, job.stream, index, SCENE_PURPOSE))
    if scene is REJECTED:
        return index, "rejected", 0, [{"kind": "rejected", "scene": index}] if job.log else None
    if job.condition is not None and _scene_holds(job.condition, scene) is not True:
        return index, "filtered", 0, None
    if job.static is not None and _scene_holds(job.static, scene) is True:
        return index, "static", 0, [{"kind": "static_pass", "scene": index}] if job.log else None
    try:
        trace = run_trace(scene, job.scenario, job.component,
                          substream(job.seed, job.stream, index, DYNAMICS_PURPOSE))
    except TraceAborted as exc:
        return index, "aborted", 0, [{"kind": "aborted", "scene": index, "error": str(exc)}] if job.log else None
    records = None
    if job.log:
        records = [{"kind": "step", "scene": index, **r} for r in trace.to_records()]
    try:
        cat = satisfies(trace, job.contract).value
    except MissingVariableError as exc:
        return index, "excluded", len(trace), (records or []) + (
            [{"kind": "excluded", "scene": index, "error": str(exc)}] if job.log else [])
    return index, cat, len(trace), records


_WORKER_JOB = None


def _init_worker(job):
    global _WORKER_JOB
    _WORKER_JOB = job


def _classify_in_worker(index):
    return classify_scene(_WORKER_JOB, index)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


class OutcomeCache:
    """Memo of per-scene classifications, keyed by job and scene index.

    Lets budget sweeps reuse the prefix they share; results are identical
    with or without it.
    """

    def __init__(self):
        self._store = {}

    def get(self, job: TestJob, index: int):
        return self._store.get((job.key(), index))

    def put(self, job: TestJob, index: int, value):
        self._store[(job.key(), index)] = value

    def __len__(self):
        return len(self._store)


def classify_indices(job: TestJob, indices: Sequence[int], workers: int = 1,
                     cache: OutcomeCache | None = None) -> list:
    """Classify scenes in index order; parallel runs give identical results."""
    results = {}
    todo = []
    for i in indices:
        hit = cache.get(job, i) if (cache is not None and not job.log) else None
        if hit is not None:
            results[i] = (i, hit[0], hit[1], None)
        else:
            todo.append(i)
    if workers > 1 and len(todo) > 1:
        ctx = multiprocessing.get_context("fork")
        chunk = max(1, len(todo) // (workers * 8))
        with ctx.Pool(workers, initializer=_init_worker, initargs=(job,)) as pool:
            out = pool.map(_classify_in_worker, todo, chunksize=chunk)
    else:
        out = [classify_scene(job, i) for i in todo]
    for r in out:
        results[r[0]] = r
        if cache is not None and r[1] != "aborted":
            cache.put(job, r[0], (r[1], r[2]))
    return [results[i] for i in indices]


SIMULATED = frozenset({"verified", "a_violated", "g_violated", "aborted", "excluded"})


def select_until(job: TestJob, n: int, counts: Callable[[str], bool], workers: int = 1,
                 cache=None) -> list:
    """Classify scenes in index order until ``n`` results satisfy ``counts``.

    Returns every result up to and including the n-th counted one, except
    scenes filtered out by the job's condition.
    """
    picked, start, hits = [], 0, 0
    while hits < n:
        need = n - hits
        # size the next batch from the hit rate so far, to avoid over-scanning
        rate = max(hits / start, 0.05) if start else 1.0
        size = int(need / rate * 1.05) + 8
        batch = list(range(start, start + size))
        start += size
        for r in classify_indices(job, batch, workers, cache):
            if r[1] == "filtered":
                continue
            picked.append(r)
            if counts(r[1]):
                hits += 1
                if hits == n:
                    break
    return picked


def select_scenes(job: TestJob, n: int, budget_unit: str = "samples", workers: int = 1,
                  cache=None) -> list:
    """Results for a budget of ``n`` scene draws or ``n`` simulated traces."""
    if budget_unit == "samples":
        if job.condition is None:
            return classify_indices(job, range(n), workers, cache)
        return select_until(job, n, lambda cat: True, workers, cache)
    if budget_unit == "simulations":
        return select_until(job, n, SIMULATED.__contains__, workers, cache)
    raise ValueError(f"unknown budget unit {budget_unit!r}")


def tally(results, wall_seconds: float = 0.0) -> TestingOutcome:
    counts = {"rejected": 0, "static": 0, "verified": 0, "a_violated": 0, "g_violated": 0,
              "aborted": 0, "excluded": 0}
    steps = 0
    for _, cat, n_steps, _ in results:
        counts[cat] += 1
        steps += n_steps
    return TestingOutcome(
        n_sampled=counts["rejected"] + counts["static"] + counts["verified"]
        + counts["a_violated"] + counts["g_violated"],
        n_rejected=counts["rejected"],
        n_verified=counts["static"] + counts["verified"],
        n_a_violated=counts["a_violated"],
        n_g_violated=counts["g_violated"],
        n_static_pass=counts["static"],
        n_aborted=counts["aborted"],
        n_excluded=counts["excluded"],
        simulated_steps=steps,
        wall_seconds=wall_seconds,
    )


def calibrate_budget(seconds: float, scenario: Scenario, component: Component,
                     contract: Contract, seed: int, traces: int = 10) -> int:
    """Convert a wall-clock budget to a scene count from a short timed pre-run.

    The pre-run uses its own stream, so the campaign's scenes are untouched;
    the returned count is then fixed and the campaign stays seed-deterministic.
    """
    if seconds <= 0:
        raise ValueError("time budget must be positive")
    job = TestJob(scenario, component, contract, seed, "calibration")
    t0 = time.perf_counter()
    for i in range(traces):
        classify_scene(job, i)
    per_scene = max((time.perf_counter() - t0) / traces, 1e-6)
    return max(1, int(seconds / per_scene))


def write_trace_log(path, header: dict, results) -> None:
    with open(path, "w") as fh:
        fh.write(json.dumps({"kind": "header", **header}, sort_keys=True) + "\n")
        for _, _, _, records in results:
            for rec in records or ():
                fh.write(json.dumps(rec, sort_keys=True) + "\n")


def testing_meta(job: TestJob, n: int, c: float, budget_unit: str = "samples") -> dict:
    meta = {
        "scenario": job.scenario.name,
        "scenario_hash": job.scenario.hash,
        "seed": job.seed,
        "stream": job.stream,
        "budget": n,
        "budget_unit": budget_unit,
        "confidence": c,
        "component": job.component.name,
    }
    if job.condition is not None:
        meta["condition"] = json.dumps(formula_to_json(job.condition), sort_keys=True)
    return meta


def verify_testing(contract: Contract, scenario: Scenario, component: Component, n: int, c: float,
                   seed: int, stream: str = "default", workers: int | None = None,
                   trace_log=None, cache: OutcomeCache | None = None,
                   condition: A.Formula | None = None, budget_unit: str = "samples") -> Evidence:
    """Simulation-based testing with a Clopper-Pearson bound.

    Draws scenes 0..n-1 of the (seed, stream) substream family, simulates
    the non-rejected ones and classifies each trace. With ``condition``,
    sampling is restricted to scenes satisfying that scene-level formula.
    With ``budget_unit="simulations"`` the budget counts simulated traces
    instead of scene draws (a stand-in for testing time).
    """
    if n < 1:
        raise ValueError("need at least one sample")
    if not 0.0 < c < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    workers = default_workers() if workers is None else workers
    job = TestJob(scenario, component, contract, seed, stream, condition=condition,
                  log=trace_log is not None)
    t0 = time.perf_counter()
    results = select_scenes(job, n, budget_unit, workers, cache)
    outcome = tally(results, time.perf_counter() - t0)
    meta = testing_meta(job, n, c, budget_unit)
    if trace_log is not None:
        write_trace_log(trace_log, {**meta, "contract": contract_to_json(contract)}, results)
    return testing_evidence(contract, outcome, c, meta)


def testing_evidence(contract: Contract, outcome: TestingOutcome, c: float, meta: dict,
                     kind: EvidenceKind = EvidenceKind.TEST, children=()) -> Evidence:
    if outcome.n_effective == 0:
        raise ValueError("all samples rejected")
    p = clopper_pearson_lower(outcome.k, outcome.n_effective, c)
    return Evidence(kind, contract, ProbBound(p, c), children=children, meta=meta, outcome=outcome)


def replay_testing(log_path, contract: Contract | None = None, c: float | None = None) -> Evidence:
    """Rebuild Test evidence from a trace log without re-simulating."""
    header, scenes = None, {}
    with open(log_path) as fh:
        for line in fh:
            rec = json.loads(line)
            kind = rec.pop("kind")
            if kind == "header":
                header = rec
                continue
            scenes.setdefault(rec["scene"], []).append((kind, rec))
    if header is None:
        raise ValueError(f"{log_path}: missing header line")
    if contract is None:
        contract = contract_from_json(header["contract"])
    c = header["confidence"] if c is None else c
    results = []
    for idx in sorted(scenes):
        entries = scenes[idx]
        kinds = {k for k, _ in entries}
        if "rejected" in kinds:
            results.append((idx, "rejected", 0, None))
        elif "static_pass" in kinds:
            results.append((idx, "static", 0, None))
        elif "aborted" in kinds:
            results.append((idx, "aborted", 0, None))
        else:
            rows = [r for k, r in entries if k == "step"]
            trace = Trace.from_records(rows)
            try:
                cat = satisfies(trace, contract).value
            except MissingVariableError:
                cat = "excluded"
            results.append((idx, cat, len(trace), None))
    meta = {k: header[k] for k in header if k != "contract"}
    meta["confidence"] = c
    return testing_evidence(contract, tally(results), c, meta)
