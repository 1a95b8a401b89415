"""Stable, node-kind tagged JSON form of expressions and formulas."""
from __future__ import annotations

from fractions import Fraction

from . import ast as A

_UNARY = {"neg": A.Neg, "next_value": A.NextVal, "not": A.Not, "next": A.Next,
          "always": A.Always, "eventually": A.Eventually}
_BINARY = {"and": A.And, "or": A.Or, "implies": A.Implies, "iff": A.Iff, "until": A.Until}
_UNARY_TAG = {v: k for k, v in _UNARY.items()}
_BINARY_TAG = {v: k for k, v in _BINARY.items()}


def formula_to_json(node) -> dict:
    if isinstance(node, A.Const):
        q = node.value
        return {"kind": "const", "value": f"{q.numerator}/{q.denominator}"}
    if isinstance(node, A.Var):
        return {"kind": "var", "path": node.path}
    if isinstance(node, A.Prop):
        return {"kind": "prop", "path": node.path}
    if isinstance(node, A.BoolConst):
        return {"kind": "bool", "value": node.value}
    if isinstance(node, A.BinOp):
        return {"kind": "arith", "op": node.op,
                "left": formula_to_json(node.left), "right": formula_to_json(node.right)}
    if isinstance(node, A.Atom):
        return {"kind": "atom", "op": node.op,
                "left": formula_to_json(node.left), "right": formula_to_json(node.right)}
    if isinstance(node, A.Call):
        return {"kind": "call", "fn": node.fn, "args": [formula_to_json(a) for a in node.args]}
    tag = _UNARY_TAG.get(type(node))
    if tag:
        return {"kind": tag, "arg": formula_to_json(node.arg)}
    tag = _BINARY_TAG.get(type(node))
    if tag:
        return {"kind": tag, "left": formula_to_json(node.left), "right": formula_to_json(node.right)}
    raise TypeError(f"cannot serialize {node!r}")


def formula_from_json(d: dict):
    kind = d.get("kind")
    if kind == "const":
        return A.Const(Fraction(d["value"]))
    if kind == "var":
        return A.Var(d["path"])
    if kind == "prop":
        return A.Prop(d["path"])
    if kind == "bool":
        return A.BoolConst(bool(d["value"]))
    if kind == "arith":
        return A.BinOp(d["op"], formula_from_json(d["left"]), formula_from_json(d["right"]))
    if kind == "atom":
        return A.Atom(d["op"], formula_from_json(d["left"]), formula_from_json(d["right"]))
    if kind == "call":
        return A.Call(d["fn"], tuple(formula_from_json(a) for a in d["args"]))
    if kind in _UNARY:
        return _UNARY[kind](formula_from_json(d["arg"]))
    if kind in _BINARY:
        return _BINARY[kind](formula_from_json(d["left"]), formula_from_json(d["right"]))
    raise ValueError(f"unknown node kind {kind!r}")
