"""Campaign specs for the braking system: validation, execution, summaries.

A spec names evidence ``sources`` (tests, proofs, assumptions, testing-based
weak merges) and a ``pipeline``: an expression tree of operators over those
sources. Strings in the tree refer to sources; dicts apply an operator:

    {compose|conjoin|strong_merge: [node, ...], name: str}
    {weak_merge: [node, node], p_a1: float, p_a1_source: str}
    {refine: {of: node, to: contract, method: syntactic|exhaustive|reachability,
              domain: name, component: str}}

Optional ``reports`` map names to further pipeline trees that are evaluated
on request and listed in the summary.
"""
from __future__ import annotations

import copy
import dataclasses
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

import yaml

from ..algebra import (
    RefinementError, check_refinement, combine_union, combine_weak_merge, refine,
    refinement_contract, weak_merge_tested,
)
from ..evidence import (
    Evidence, OutcomeCache, verify_assumption, verify_proof, verify_testing,
)
from ..lang.parser import ParseError, parse_formula
from ..lang.semantics import TableTrace, evaluate
from ..stats import TestingOutcome
from ..traces import REJECTED, SCENE_PURPOSE, substream
from . import dynamics as D
from .catalog import build_contract_catalog
from .model import AebScenario, car_component, control_component, perception_component
from .proofs import DOMAINS, exhaustive_checker
from .reachability import ReachabilityChecker

COMPONENTS = {
    "Car": car_component,
    "PerceptionSystem": perception_component,
    "ControlSystem": control_component,
}
UNION_OPS = ("compose", "conjoin", "strong_merge")
REFINE_METHODS = ("syntactic", "exhaustive", "reachability")
SOURCE_KINDS = ("test", "assume", "proof", "weak_merge_tested")
REACHABILITY_PREMISES = ("perception", "speed", "control", "brakes")
OVERRIDABLE = ("seed", "samples", "confidence", "budget_unit")


class SpecError(ValueError):
    """The campaign spec is malformed or refers to something that does not exist."""


# -- loading -----------------------------------------------------------------

def bundled_spec(mode: str) -> dict:
    try:
        text = resources.files(__package__).joinpath("bundled").joinpath(f"{mode}.yaml").read_text()
    except FileNotFoundError:
        raise SpecError(f"no bundled spec {mode!r}; expected 'naive' or 'optimized'") from None
    return yaml.safe_load(text)


def load_spec(path_or_mode: str) -> dict:
    if path_or_mode in ("naive", "optimized"):
        return bundled_spec(path_or_mode)
    try:
        with open(path_or_mode) as fh:
            spec = yaml.safe_load(fh)
    except OSError as exc:
        raise SpecError(f"cannot read spec {path_or_mode!r}: {exc}") from None
    except yaml.YAMLError as exc:
        raise SpecError(f"spec {path_or_mode!r} is not valid YAML: {exc}") from None
    if not isinstance(spec, dict):
        raise SpecError(f"spec {path_or_mode!r} must be a mapping")
    return spec


def apply_overrides(spec: dict, **overrides) -> dict:
    """Flags beat file values; None means 'not given'."""
    out = copy.deepcopy(spec)
    for key, value in overrides.items():
        if key not in OVERRIDABLE:
            raise SpecError(f"{key!r} cannot be overridden")
        if value is not None:
            out[key] = value
    return out


# -- validation --------------------------------------------------------------

def validate_spec(spec: dict) -> None:
    """Raise SpecError naming the first problem found."""
    catalog = build_contract_catalog()
    for key in ("seed", "samples", "confidence", "sources", "pipeline"):
        if key not in spec:
            raise SpecError(f"missing required key {key!r}")
    if not isinstance(spec["seed"], int):
        raise SpecError("seed must be an integer")
    if not isinstance(spec["samples"], int) or spec["samples"] < 1:
        raise SpecError("samples must be a positive integer")
    if not 0.0 < float(spec["confidence"]) < 1.0:
        raise SpecError("confidence must lie in (0, 1)")
    if spec.get("budget_unit", "samples") not in ("samples", "simulations"):
        raise SpecError("budget_unit must be 'samples' or 'simulations'")
    scen = spec.get("scenario", {"builtin": "aeb-highway"})
    if scen.get("builtin") != "aeb-highway":
        raise SpecError(f"unknown scenario {scen.get('builtin')!r}; built-in: 'aeb-highway'")
    try:
        D.AebParams(**(scen.get("params") or {}))
    except TypeError as exc:
        raise SpecError(f"bad scenario params: {exc}") from None
    sources = spec["sources"]
    if not isinstance(sources, dict):
        raise SpecError("sources must be a mapping")

    def need_contract(where, key):
        if key not in catalog:
            raise SpecError(f"{where}: unknown contract {key!r}")

    def need_domain(where, key):
        if key not in DOMAINS:
            raise SpecError(f"{where}: unknown proof domain {key!r}")

    for name, src in sources.items():
        where = f"source {name!r}"
        if not isinstance(src, dict) or len(src) != 1 or next(iter(src)) not in SOURCE_KINDS:
            raise SpecError(f"{where}: expected one of {list(SOURCE_KINDS)}")
        kind, body = next(iter(src.items()))
        if not isinstance(body, dict):
            raise SpecError(f"{where}: {kind} needs a mapping")
        if kind == "weak_merge_tested":
            need_contract(where, body.get("proved"))
            need_contract(where, body.get("tested"))
            need_domain(where, body.get("domain"))
        else:
            need_contract(where, body.get("contract"))
        if kind in ("test", "weak_merge_tested") and body.get("component", "Car") not in COMPONENTS:
            raise SpecError(f"{where}: unknown component {body.get('component')!r}")
        if kind == "proof":
            need_domain(where, body.get("domain"))
        if kind == "assume":
            for k in ("p", "c", "justification"):
                if k not in body:
                    raise SpecError(f"{where}: assume needs {k!r}")
        cond = body.get("condition")
        if cond is not None and cond not in catalog:
            try:
                parse_formula(cond)
            except ParseError as exc:
                raise SpecError(f"{where}: bad condition: {exc}") from None

    def walk(node, where):
        if isinstance(node, str):
            if node not in sources:
                raise SpecError(f"{where}: dangling evidence reference {node!r}")
            return
        if not isinstance(node, dict):
            raise SpecError(f"{where}: expected a source name or an operator mapping")
        ops = [k for k in node if k in UNION_OPS + ("weak_merge", "refine")]
        if len(ops) != 1:
            raise SpecError(f"{where}: expected exactly one operator, got {sorted(node)}")
        op = ops[0]
        if op == "refine":
            body = node["refine"]
            if not isinstance(body, dict) or "of" not in body or "to" not in body:
                raise SpecError(f"{where}: refine needs 'of' and 'to'")
            need_contract(where, body["to"])
            if body.get("method") not in REFINE_METHODS:
                raise SpecError(f"{where}: refine method must be one of {list(REFINE_METHODS)}")
            if body["method"] == "exhaustive":
                need_domain(where, body.get("domain"))
            walk(body["of"], where + ".refine")
            return
        args = node[op]
        if not isinstance(args, list) or len(args) < 2:
            raise SpecError(f"{where}: {op} needs a list of at least two operands")
        if op == "weak_merge":
            if len(args) != 2 or "p_a1" not in node or not node.get("p_a1_source"):
                raise SpecError(f"{where}: weak_merge needs two operands, p_a1 and p_a1_source")
        for i, a in enumerate(args):
            walk(a, f"{where}.{op}[{i}]")

    walk(spec["pipeline"], "pipeline")
    for name, tree in (spec.get("reports") or {}).items():
        walk(tree, f"report {name!r}")


# -- execution ---------------------------------------------------------------

@dataclass
class CampaignResult:
    spec: dict
    evidence: Evidence
    reports: dict = field(default_factory=dict)

    @property
    def perception(self) -> Optional[Evidence]:
        return _find(self.evidence, lambda e: e.outcome is not None)

    def summary(self) -> dict:
        row = {
            "name": self.spec.get("name", ""), "seed": self.spec["seed"],
            "budget": self.spec["samples"], "budget_unit": self.spec.get("budget_unit", "samples"),
            "bound": self.evidence.p, "confidence": self.evidence.c,
        }
        tested = [e for e in _walk(self.evidence) if e.outcome is not None]
        out = TestingOutcome()
        for e in tested:
            out = out.merge(e.outcome)
        row.update({"k": out.k, "n_effective": out.n_effective, "n_static_pass": out.n_static_pass,
                    "simulated_steps": out.simulated_steps,
                    "wall_seconds": round(out.wall_seconds, 3)})
        for name, e in sorted(self.reports.items()):
            row[f"{name}_bound"] = e.p
        return row


def _walk(e: Evidence):
    yield e
    for ch in e.children:
        yield from _walk(ch)


def _find(e: Evidence, pred):
    for node in _walk(e):
        if pred(node):
            return node
    return None


def _with_meta(e: Evidence, **meta) -> Evidence:
    return dataclasses.replace(e, meta={**e.meta, **meta})


class _Runner:
    def __init__(self, spec: dict, workers: Optional[int], cache: Optional[OutcomeCache],
                 trace_log_dir: Optional[str]):
        self.spec = spec
        self.workers = workers
        self.cache = cache
        self.trace_log_dir = trace_log_dir
        self.catalog = build_contract_catalog()
        params = (spec.get("scenario") or {}).get("params") or {}
        self.scenario = AebScenario(D.AebParams(**params))
        self.checker = exhaustive_checker()
        self.reach = ReachabilityChecker([self.catalog[k].guarantees for k in REACHABILITY_PREMISES],
                                         self.catalog["keeps_distance"])
        self.done = {}

    def source(self, name: str) -> Evidence:
        if name not in self.done:
            self.done[name] = self._build(name, self.spec["sources"][name])
        return self.done[name]

    def _certificate(self, contract_key, domain_key):
        contract = self.catalog[contract_key]
        return self.checker.certificate(contract, DOMAINS[domain_key], cert_id=f"grid-{domain_key}")

    def _build(self, name: str, src: dict) -> Evidence:
        kind, b = next(iter(src.items()))
        spec = self.spec
        n = spec["samples"]
        c = float(b.get("confidence", spec["confidence"]))
        unit = spec.get("budget_unit", "samples")
        if kind == "assume":
            return verify_assumption(self.catalog[b["contract"]], float(b["p"]), float(b["c"]),
                                     b["justification"], b.get("component", ""))
        if kind == "proof":
            return _cached_proof(self.checker, self._certificate(b["contract"], b["domain"]),
                                 self.catalog[b["contract"]], b.get("component", ""))
        component = COMPONENTS[b.get("component", "Car")]()
        stream = b.get("stream", name)
        if kind == "test":
            cond = b.get("condition")
            if cond is not None:
                cond = self.catalog[cond].assumptions if cond in self.catalog else parse_formula(cond)
            log = None if self.trace_log_dir is None else f"{self.trace_log_dir}/{name}.jsonl"
            e = verify_testing(self.catalog[b["contract"]], self.scenario, component, n, c,
                               spec["seed"], stream, workers=self.workers, trace_log=log,
                               cache=self.cache, condition=cond, budget_unit=unit)
            return _with_meta(e, subject=b["subject"]) if b.get("subject") else e
        cert = self._certificate(b["proved"], b["domain"])
        return weak_merge_tested(cert, self.checker, self.catalog[b["proved"]],
                                 self.catalog[b["tested"]], self.scenario, component, n, c,
                                 spec["seed"], stream, workers=self.workers, cache=self.cache,
                                 budget_unit=unit, name=b.get("name"),
                                 proved_component=b.get("proved_component", ""))

    def node(self, tree) -> Evidence:
        if isinstance(tree, str):
            return self.source(tree)
        if "refine" in tree:
            return self._refine(tree["refine"])
        if "weak_merge" in tree:
            e1, e2 = (self.node(t) for t in tree["weak_merge"])
            return combine_weak_merge(e1, e2, float(tree["p_a1"]), tree["p_a1_source"],
                                      name=tree.get("name"))
        op = next(k for k in tree if k in UNION_OPS)
        parts = [self.node(t) for t in tree[op]]
        acc = parts[0]
        for e in parts[1:]:
            acc = combine_union(acc, e, op, name=tree.get("name"))
        return acc

    def _refine(self, b: dict) -> Evidence:
        child = self.node(b["of"])
        target = self.catalog[b["to"]]
        method = b["method"]
        if method == "syntactic":
            w = check_refinement(child.contract, target, "Syntactic")
        elif method == "exhaustive":
            w = check_refinement(child.contract, target, "ExhaustiveFiniteDomain",
                                 domain=DOMAINS[b["domain"]])
        else:
            claim = refinement_contract(child.contract, target)
            w = check_refinement(child.contract, target, "ExternalCertificate", checker=self.reach,
                                 certificate=self.reach.certificate(claim))
        if not hasattr(w, "method"):
            raise RefinementError(f"{child.contract.name!r} does not refine {target.name!r}: "
                                  f"counterexample {w.describe()}")
        e = refine(child, w, target)
        return _with_meta(e, component=b["component"]) if b.get("component") else e


_PROOFS = {}


def _cached_proof(checker, cert, contract, component):
    # exhaustive checks are deterministic, so repeated campaigns reuse the verdict
    key = (checker.id, cert.id, cert.payload_hash, contract.hash, component)
    if key not in _PROOFS:
        _PROOFS[key] = verify_proof(cert, checker, contract, component=component)
    return _PROOFS[key]


def effective_config(spec: dict) -> dict:
    """The campaign as run, minus output locations; embedded in the evidence for audit."""
    return {k: v for k, v in spec.items() if k not in ("outputs",)}


def execute_spec(spec: dict, workers: int | None = None, cache: OutcomeCache | None = None,
                 reports: bool = False, trace_log_dir: str | None = None) -> CampaignResult:
    validate_spec(spec)
    runner = _Runner(spec, workers, cache, trace_log_dir)
    top = runner.node(spec["pipeline"])
    top = _with_meta(top, campaign=effective_config(spec))
    extra = {}
    if reports:
        for name, tree in (spec.get("reports") or {}).items():
            extra[name] = runner.node(tree)
    return CampaignResult(spec, top, extra)


def run_campaign(mode: str, budget: int, seed: int, workers: int | None = None,
                 cache: OutcomeCache | None = None, budget_unit: str = "samples",
                 confidence: float | None = None, reports: bool = False) -> CampaignResult:
    """Run a bundled pipeline ("naive" or "optimized") at the given budget and seed.

    ``budget`` counts scene draws by default, so both modes see exactly the
    same scenes; ``budget_unit="simulations"`` counts simulated traces (the
    cost testing time pays for) instead.
    """
    if budget < 50:
        raise ValueError("budget must be at least 50")
    spec = apply_overrides(bundled_spec(mode), seed=seed, samples=budget,
                           budget_unit=budget_unit, confidence=confidence)
    return execute_spec(spec, workers, cache, reports)


def known_scene_fraction(seed: int, n: int = 10_000, params: D.AebParams | None = None) -> float:
    """Fraction of non-rejected scene draws inside the Known region."""
    scenario = AebScenario(params)
    known = build_contract_catalog()["known"].assumptions
    hits = total = 0
    for i in range(n):
        scene = scenario.sample_scene(substream(seed, "known-fraction", i, SCENE_PURPOSE))
        if scene is REJECTED:
            continue
        total += 1
        hits += evaluate(known, TableTrace([scene.values]))[0] is True
    return hits / total
