"""Syntax trees for arithmetic expressions and finite-trace temporal formulas.

All nodes are frozen dataclasses, so structural equality and hashing come for
free. Expressions denote rational values at a trace position; formulas denote
truth values.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Union

ARITH_OPS = ("+", "-", "*", "/")
CMP_OPS = ("<=", "<", ">=", ">", "==", "!=")
FUNCTIONS = {"min": 2, "max": 2, "floor": 1, "ceil": 1, "abs": 1}


# -- expressions ------------------------------------------------------------

@dataclass(frozen=True)
class Const:
    value: Fraction

    def __post_init__(self):
        v = self.value
        if not isinstance(v, Fraction):
            v = Fraction(v)
            object.__setattr__(self, "value", v)
        if v < 0:
            raise ValueError("constants are non-negative; use Neg for negative values")


@dataclass(frozen=True)
class Var:
    path: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"

    def __post_init__(self):
        if self.op not in ARITH_OPS:
            raise ValueError(f"unknown arithmetic operator {self.op!r}")


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple

    def __post_init__(self):
        if self.fn not in FUNCTIONS:
            raise ValueError(f"unknown function {self.fn!r}")
        object.__setattr__(self, "args", tuple(self.args))
        if len(self.args) != FUNCTIONS[self.fn]:
            raise ValueError(f"{self.fn} takes {FUNCTIONS[self.fn]} argument(s)")


@dataclass(frozen=True)
class NextVal:
    """Value of the wrapped expression one step later."""
    arg: "Expr"


Expr = Union[Const, Var, Neg, BinOp, Call, NextVal]


# -- formulas ---------------------------------------------------------------

@dataclass(frozen=True)
class BoolConst:
    value: bool


@dataclass(frozen=True)
class Prop:
    """A bare variable used as a boolean: true iff its value is non-zero."""
    path: str


@dataclass(frozen=True)
class Atom:
    op: str
    left: Expr
    right: Expr

    def __post_init__(self):
        if self.op not in CMP_OPS:
            raise ValueError(f"unknown comparison {self.op!r}")


@dataclass(frozen=True)
class Not:
    arg: "Formula"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Or:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Implies:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Iff:
    left: "Formula"
    right: "Formula"


@dataclass(frozen=True)
class Next:
    arg: "Formula"


@dataclass(frozen=True)
class Always:
    arg: "Formula"


@dataclass(frozen=True)
class Eventually:
    arg: "Formula"


@dataclass(frozen=True)
class Until:
    left: "Formula"
    right: "Formula"


Formula = Union[BoolConst, Prop, Atom, Not, And, Or, Implies, Iff, Next, Always, Eventually, Until]

TRUE = BoolConst(True)
FALSE = BoolConst(False)

EXPR_TYPES = (Const, Var, Neg, BinOp, Call, NextVal)
FORMULA_TYPES = (BoolConst, Prop, Atom, Not, And, Or, Implies, Iff, Next, Always, Eventually, Until)
BINARY_FORMULAS = (And, Or, Implies, Iff, Until)
UNARY_FORMULAS = (Not, Next, Always, Eventually)


def children(node) -> tuple:
    if isinstance(node, (Const, Var, BoolConst, Prop)):
        return ()
    if isinstance(node, (Neg, NextVal, Not, Next, Always, Eventually)):
        return (node.arg,)
    if isinstance(node, Call):
        return node.args
    return (node.left, node.right)


def walk(node) -> Iterator:
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(children(n)))


def variables(node) -> frozenset:
    """Every variable path read by the node (including boolean props)."""
    return frozenset(n.path for n in walk(node) if isinstance(n, (Var, Prop)))


def has_value_next(node) -> bool:
    return any(isinstance(n, NextVal) for n in walk(node))


def conjuncts(f: Formula) -> list:
    """Split a formula into its top-level conjuncts, left to right."""
    if isinstance(f, And):
        return conjuncts(f.left) + conjuncts(f.right)
    return [f]


def conjoin_all(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return TRUE
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def disjoin_all(parts) -> Formula:
    parts = list(parts)
    if not parts:
        return FALSE
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def rename(node, mapping: dict):
    """Substitute variable paths according to ``mapping`` (others unchanged)."""
    if isinstance(node, Var):
        return Var(mapping.get(node.path, node.path))
    if isinstance(node, Prop):
        return Prop(mapping.get(node.path, node.path))
    if isinstance(node, (Const, BoolConst)):
        return node
    if isinstance(node, Call):
        return Call(node.fn, tuple(rename(a, mapping) for a in node.args))
    if isinstance(node, (BinOp, Atom)):
        return type(node)(node.op, rename(node.left, mapping), rename(node.right, mapping))
    if isinstance(node, BINARY_FORMULAS):
        return type(node)(rename(node.left, mapping), rename(node.right, mapping))
    return type(node)(rename(node.arg, mapping))
