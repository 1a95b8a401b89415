"""Assume-guarantee contracts and per-trace classification."""
from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field

from . import ast as A
from .jsonform import formula_to_json
from .parser import parse_formula
from .render import render
from .semantics import evaluate


class Outcome(enum.Enum):
    VERIFIED = "verified"
    A_VIOLATED = "a_violated"
    G_VIOLATED = "g_violated"

    @property
    def satisfied(self) -> bool:
        return self is not Outcome.G_VIOLATED


class MissingVariableError(LookupError):
    def __init__(self, paths):
        self.paths = tuple(sorted(paths))
        super().__init__("trace lacks contract variable(s): " + ", ".join(self.paths))


@dataclass(frozen=True)
class Contract:
    name: str
    assumptions: A.Formula
    guarantees: A.Formula
    signature: frozenset = field(init=False, compare=False)

    def __post_init__(self):
        if isinstance(self.assumptions, str):
            object.__setattr__(self, "assumptions", parse_formula(self.assumptions))
        if isinstance(self.guarantees, str):
            object.__setattr__(self, "guarantees", parse_formula(self.guarantees))
        sig = A.variables(self.assumptions) | A.variables(self.guarantees)
        object.__setattr__(self, "signature", sig)

    @property
    def body(self) -> A.Formula:
        """The formula a satisfying trace must make true: A implies G."""
        return A.Implies(self.assumptions, self.guarantees)

    @property
    def hash(self) -> str:
        """Content hash of (assumptions, guarantees); the name is not part of it."""
        payload = json.dumps(
            [formula_to_json(self.assumptions), formula_to_json(self.guarantees)],
            sort_keys=True, separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def renamed(self, mapping: dict, name: str | None = None) -> "Contract":
        return Contract(name or self.name, A.rename(self.assumptions, mapping),
                        A.rename(self.guarantees, mapping))

    def with_name(self, name: str) -> "Contract":
        return Contract(name, self.assumptions, self.guarantees)

    def __str__(self):
        return f"{self.name}: ({render(self.assumptions)}, {render(self.guarantees)})"


def satisfies(trace, contract: Contract) -> Outcome:
    """Classify a trace against a contract.

    A-violated when the assumptions are false at step 0 (the contract then
    holds vacuously); G-violated when ``A implies G`` is false; verified
    otherwise. A trace lacking one of the contract's variables raises
    MissingVariableError rather than being silently classified.
    """
    has = getattr(trace, "has", None)
    if has is not None:
        missing = [p for p in contract.signature if not has(p)]
        if missing:
            raise MissingVariableError(missing)
    a = evaluate(contract.assumptions, trace)[0]
    if a is False:
        return Outcome.A_VIOLATED
    g = evaluate(contract.guarantees, trace)[0]
    if a is True and g is False:
        return Outcome.G_VIOLATED
    return Outcome.VERIFIED


def statically_decidable(f: A.Formula, scene_vars) -> bool:
    """True when ``f`` only reads scene variables and has no ``next`` of either kind.

    Such a formula has the same value on every trace that starts from the same
    scene, whatever the trace's length.
    """
    scene_vars = set(scene_vars)
    for n in A.walk(f):
        if isinstance(n, (A.NextVal, A.Next)):
            return False
        if isinstance(n, (A.Var, A.Prop)) and n.path not in scene_vars:
            return False
    return True
