"""Semantics-preserving formula cleanup.

Only rewrites that are valid under the three-valued semantics are applied.
Temporal ``next`` is never touched: it is false at the last position, so even
``next true`` is not equivalent to ``true``.
"""
from __future__ import annotations

from . import ast as A


def simplify(f: A.Formula) -> A.Formula:
    if isinstance(f, (A.BoolConst, A.Prop, A.Atom)):
        return f
    if isinstance(f, A.Not):
        a = simplify(f.arg)
        if isinstance(a, A.BoolConst):
            return A.BoolConst(not a.value)
        if isinstance(a, A.Not):
            return a.arg
        return A.Not(a)
    if isinstance(f, A.And):
        l, r = simplify(f.left), simplify(f.right)
        if l == A.FALSE or r == A.FALSE:
            return A.FALSE
        if l == A.TRUE:
            return r
        if r == A.TRUE or l == r:
            return l
        return A.And(l, r)
    if isinstance(f, A.Or):
        l, r = simplify(f.left), simplify(f.right)
        if l == A.TRUE or r == A.TRUE:
            return A.TRUE
        if l == A.FALSE:
            return r
        if r == A.FALSE or l == r:
            return l
        return A.Or(l, r)
    if isinstance(f, A.Implies):
        l, r = simplify(f.left), simplify(f.right)
        if l == A.TRUE:
            return r
        if l == A.FALSE or r == A.TRUE:
            return A.TRUE
        if r == A.FALSE:
            return simplify(A.Not(l))
        return A.Implies(l, r)
    if isinstance(f, A.Iff):
        l, r = simplify(f.left), simplify(f.right)
        if l == A.TRUE:
            return r
        if r == A.TRUE:
            return l
        return A.Iff(l, r)
    if isinstance(f, A.Always):
        a = simplify(f.arg)
        if isinstance(a, A.BoolConst):
            return a
        return A.Always(a)
    if isinstance(f, A.Eventually):
        a = simplify(f.arg)
        if isinstance(a, A.BoolConst):
            return a
        return A.Eventually(a)
    if isinstance(f, A.Next):
        return A.Next(simplify(f.arg))
    if isinstance(f, A.Until):
        l, r = simplify(f.left), simplify(f.right)
        if isinstance(r, A.BoolConst):
            return r
        return A.Until(l, r)
    raise TypeError(f"not a formula: {f!r}")
