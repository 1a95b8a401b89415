"""Fully parenthesized concrete syntax, the inverse of the parser."""
from __future__ import annotations

from fractions import Fraction

from . import ast as A

_FORMULA_KW = {A.And: "and", A.Or: "or", A.Implies: "implies", A.Iff: "iff", A.Until: "until"}
_UNARY_KW = {A.Not: "not", A.Next: "next", A.Always: "always", A.Eventually: "eventually"}


def format_number(q: Fraction) -> str:
    """Exact decimal when the denominator allows it, otherwise ``p/q``."""
    q = Fraction(q)
    if q.denominator == 1:
        return str(q.numerator)
    d = q.denominator
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"{q.numerator}/{q.denominator}"
    places = max(twos, fives)
    sign = "-" if q < 0 else ""
    scaled = abs(q.numerator) * (10 ** places) // q.denominator
    digits = str(scaled).rjust(places + 1, "0")
    return f"{sign}{digits[:-places]}.{digits[-places:]}"


def _wrap(node) -> str:
    return "(" + render(node) + ")"


def render(node) -> str:
    if isinstance(node, A.Const):
        return format_number(node.value)
    if isinstance(node, (A.Var, A.Prop)):
        return node.path
    if isinstance(node, A.BoolConst):
        return "true" if node.value else "false"
    if isinstance(node, A.Neg):
        return "-" + _wrap(node.arg)
    if isinstance(node, A.NextVal):
        return "next " + _wrap(node.arg)
    if isinstance(node, A.BinOp):
        return f"{_wrap(node.left)} {node.op} {_wrap(node.right)}"
    if isinstance(node, A.Call):
        return node.fn + "(" + ", ".join(_wrap(a) for a in node.args) + ")"
    if isinstance(node, A.Atom):
        return f"{_wrap(node.left)} {node.op} {_wrap(node.right)}"
    kw = _UNARY_KW.get(type(node))
    if kw is not None:
        return f"{kw} {_wrap(node.arg)}"
    kw = _FORMULA_KW.get(type(node))
    if kw is not None:
        return f"{_wrap(node.left)} {kw} {_wrap(node.right)}"
    raise TypeError(f"cannot render {node!r}")
