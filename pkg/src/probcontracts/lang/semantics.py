"""Three-valued finite-trace evaluation.

Truth values are True, False and None (undefined). An atom is undefined when
one of its expressions reads past the end of the trace, reads a missing
variable, or divides by zero. Connectives use Kleene logic; ``always`` treats
undefined positions as satisfied and ``eventually`` needs a position that is
actually true. ``next`` on formulas is strong: false at the last position.

``evaluate`` computes whole columns bottom-up (one pass per node), and is the
routine used everywhere else. ``reference_eval`` is a direct recursive reading
of the definitions, kept as an oracle for tests.
"""
from __future__ import annotations

import enum
import math
from fractions import Fraction
from typing import Mapping, Protocol, Sequence

from . import ast as A


class TruthValue(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    UNDEFINED = "undefined"

    @classmethod
    def of(cls, v):
        if v is None:
            return cls.UNDEFINED
        return cls.TRUE if v else cls.FALSE


class TraceLike(Protocol):
    def __len__(self) -> int: ...
    def column(self, path: str) -> Sequence: ...


def to_rational(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        return Fraction(int(x))
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    # numpy scalars and the like
    return Fraction(x.item() if hasattr(x, "item") else x)


class TableTrace:
    """A trace given directly as a list of variable maps, one per step."""

    def __init__(self, rows: Sequence[Mapping[str, object]]):
        if not rows:
            raise ValueError("a trace has at least one step")
        self.rows = [dict(r) for r in rows]
        self._cols = {}

    def __len__(self):
        return len(self.rows)

    def column(self, path):
        col = self._cols.get(path)
        if col is None:
            col = [None if r.get(path) is None else to_rational(r[path]) for r in self.rows]
            self._cols[path] = col
        return col

    def has(self, path) -> bool:
        return all(path in r for r in self.rows)


class Diagnostics:
    def __init__(self):
        self.div_by_zero = 0
        self.missing = set()


def _k_not(a):
    return None if a is None else not a


def _k_and(a, b):
    if a is False or b is False:
        return False
    if a is None or b is None:
        return None
    return True


def _k_or(a, b):
    if a is True or b is True:
        return True
    if a is None or b is None:
        return None
    return False


def _k_implies(a, b):
    return _k_or(_k_not(a), b)


def _k_iff(a, b):
    if a is None or b is None:
        return None
    return a == b


_CMP = {
    "<=": lambda x, y: x <= y,
    "<": lambda x, y: x < y,
    ">=": lambda x, y: x >= y,
    ">": lambda x, y: x > y,
    "==": lambda x, y: x == y,
    "!=": lambda x, y: x != y,
}


def _apply(fn, args):
    if fn == "min":
        return min(args)
    if fn == "max":
        return max(args)
    if fn == "abs":
        return abs(args[0])
    if fn == "floor":
        return Fraction(math.floor(args[0]))
    return Fraction(math.ceil(args[0]))


class _Evaluator:
    def __init__(self, trace: TraceLike, diag: Diagnostics | None, single_steps: bool = False):
        # single_steps: every row is its own length-one trace
        self.single = single_steps
        self.trace = trace
        self.n = len(trace)
        self.diag = diag
        self.cache = {}

    def col(self, path):
        c = self.trace.column(path)
        if self.diag is not None and any(v is None for v in c):
            self.diag.missing.add(path)
        return c

    def expr(self, e):
        got = self.cache.get(id(e))
        if got is not None:
            return got
        n = self.n
        if isinstance(e, A.Const):
            out = [e.value] * n
        elif isinstance(e, A.Var):
            out = self.col(e.path)
        elif isinstance(e, A.Neg):
            out = [None if v is None else -v for v in self.expr(e.arg)]
        elif isinstance(e, A.NextVal) and self.single:
            out = [None] * n
        elif isinstance(e, A.NextVal):
            out = list(self.expr(e.arg)[1:]) + [None]
        elif isinstance(e, A.BinOp):
            ls, rs = self.expr(e.left), self.expr(e.right)
            op = e.op
            out = []
            for x, y in zip(ls, rs):
                if x is None or y is None:
                    out.append(None)
                elif op == "+":
                    out.append(x + y)
                elif op == "-":
                    out.append(x - y)
                elif op == "*":
                    out.append(x * y)
                elif y == 0:
                    if self.diag is not None:
                        self.diag.div_by_zero += 1
                    out.append(None)
                else:
                    out.append(x / y)
        elif isinstance(e, A.Call):
            cols = [self.expr(a) for a in e.args]
            out = [None if any(v is None for v in vs) else _apply(e.fn, vs) for vs in zip(*cols)]
        else:
            raise TypeError(f"not an expression: {e!r}")
        self.cache[id(e)] = out
        return out

    def formula(self, f):
        got = self.cache.get(id(f))
        if got is not None:
            return got
        n = self.n
        if isinstance(f, A.BoolConst):
            out = [f.value] * n
        elif isinstance(f, A.Prop):
            out = [None if v is None else v != 0 for v in self.col(f.path)]
        elif isinstance(f, A.Atom):
            cmp = _CMP[f.op]
            out = [None if x is None or y is None else cmp(x, y)
                   for x, y in zip(self.expr(f.left), self.expr(f.right))]
        elif isinstance(f, A.Not):
            out = [_k_not(v) for v in self.formula(f.arg)]
        elif isinstance(f, (A.And, A.Or, A.Implies, A.Iff)):
            op = {A.And: _k_and, A.Or: _k_or, A.Implies: _k_implies, A.Iff: _k_iff}[type(f)]
            out = [op(x, y) for x, y in zip(self.formula(f.left), self.formula(f.right))]
        elif self.single and isinstance(f, A.Next):
            out = [False] * n
        elif self.single and isinstance(f, A.Always):
            out = [v is not False for v in self.formula(f.arg)]
        elif self.single and isinstance(f, A.Eventually):
            out = [v is True for v in self.formula(f.arg)]
        elif self.single and isinstance(f, A.Until):
            self.formula(f.left)
            out = [v is True for v in self.formula(f.right)]
        elif isinstance(f, A.Next):
            out = list(self.formula(f.arg)[1:]) + [False]
        elif isinstance(f, A.Always):
            body = self.formula(f.arg)
            out = [True] * n
            acc = True
            for t in range(n - 1, -1, -1):
                if body[t] is False:
                    acc = False
                out[t] = acc
        elif isinstance(f, A.Eventually):
            body = self.formula(f.arg)
            out = [False] * n
            acc = False
            for t in range(n - 1, -1, -1):
                if body[t] is True:
                    acc = True
                out[t] = acc
        elif isinstance(f, A.Until):
            left, right = self.formula(f.left), self.formula(f.right)
            out = [False] * n
            acc = False
            for t in range(n - 1, -1, -1):
                acc = right[t] is True or (left[t] is not False and acc)
                out[t] = acc
        else:
            raise TypeError(f"not a formula: {f!r}")
        self.cache[id(f)] = out
        return out


def evaluate(f: A.Formula, trace: TraceLike, diag: Diagnostics | None = None) -> list:
    """Truth value (True/False/None) of ``f`` at every position of ``trace``."""
    return _Evaluator(trace, diag).formula(f)


def evaluate_single_steps(f: A.Formula, rows: TraceLike) -> list:
    """Value at position 0 of each row taken as a separate length-one trace.

    Same result as evaluating every row on its own, in one columnar pass.
    """
    return _Evaluator(rows, None, single_steps=True).formula(f)


def eval_formula(f: A.Formula, trace: TraceLike, t: int = 0) -> TruthValue:
    if not 0 <= t < len(trace):
        raise IndexError(f"position {t} outside trace of length {len(trace)}")
    return TruthValue.of(evaluate(f, trace)[t])


def eval_expr(e: A.Expr, trace: TraceLike, t: int = 0, diag: Diagnostics | None = None):
    """Rational value of ``e`` at position ``t``, or None when undefined."""
    if not 0 <= t < len(trace):
        raise IndexError(f"position {t} outside trace of length {len(trace)}")
    return _Evaluator(trace, diag).expr(e)[t]


def holds(f: A.Formula, trace: TraceLike) -> bool:
    """Two-valued satisfaction at position 0; undefined counts as false."""
    return evaluate(f, trace)[0] is True


# -- reference semantics (test oracle) --------------------------------------

def reference_expr(e, trace, t):
    n = len(trace)
    if t >= n:
        return None
    if isinstance(e, A.Const):
        return e.value
    if isinstance(e, A.Var):
        return trace.column(e.path)[t]
    if isinstance(e, A.Neg):
        v = reference_expr(e.arg, trace, t)
        return None if v is None else -v
    if isinstance(e, A.NextVal):
        return reference_expr(e.arg, trace, t + 1)
    if isinstance(e, A.BinOp):
        x = reference_expr(e.left, trace, t)
        y = reference_expr(e.right, trace, t)
        if x is None or y is None:
            return None
        if e.op == "+":
            return x + y
        if e.op == "-":
            return x - y
        if e.op == "*":
            return x * y
        return None if y == 0 else x / y
    if isinstance(e, A.Call):
        vals = [reference_expr(a, trace, t) for a in e.args]
        if any(v is None for v in vals):
            return None
        return _apply(e.fn, vals)
    raise TypeError(e)


def reference_eval(f, trace, t):
    n = len(trace)
    if isinstance(f, A.BoolConst):
        return f.value
    if isinstance(f, A.Prop):
        v = trace.column(f.path)[t]
        return None if v is None else v != 0
    if isinstance(f, A.Atom):
        x = reference_expr(f.left, trace, t)
        y = reference_expr(f.right, trace, t)
        if x is None or y is None:
            return None
        return _CMP[f.op](x, y)
    if isinstance(f, A.Not):
        return _k_not(reference_eval(f.arg, trace, t))
    if isinstance(f, A.And):
        return _k_and(reference_eval(f.left, trace, t), reference_eval(f.right, trace, t))
    if isinstance(f, A.Or):
        return _k_or(reference_eval(f.left, trace, t), reference_eval(f.right, trace, t))
    if isinstance(f, A.Implies):
        return _k_implies(reference_eval(f.left, trace, t), reference_eval(f.right, trace, t))
    if isinstance(f, A.Iff):
        return _k_iff(reference_eval(f.left, trace, t), reference_eval(f.right, trace, t))
    if isinstance(f, A.Next):
        return False if t + 1 >= n else reference_eval(f.arg, trace, t + 1)
    if isinstance(f, A.Always):
        return all(reference_eval(f.arg, trace, i) is not False for i in range(t, n))
    if isinstance(f, A.Eventually):
        return any(reference_eval(f.arg, trace, i) is True for i in range(t, n))
    if isinstance(f, A.Until):
        for j in range(t, n):
            if reference_eval(f.right, trace, j) is True and all(
                reference_eval(f.left, trace, i) is not False for i in range(t, j)
            ):
                return True
        return False
    raise TypeError(f)
