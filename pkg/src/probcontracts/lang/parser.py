"""Tokenizer and packrat recursive-descent parser for the contract language.

Grammar (lowest precedence first)::

    formula  := or_f (('implies' | 'iff') formula)?
    or_f     := and_f ('or' and_f)*
    and_f    := until_f ('and' until_f)*
    until_f  := unary_f ('until' until_f)?
    unary_f  := ('not' | 'always' | 'eventually' | 'next') unary_f | primary_f
    primary_f:= atom | '(' formula ')' | 'true' | 'false' | variable
    atom     := expr cmp expr
    expr     := term (('+' | '-') term)*
    term     := factor (('*' | '/') factor)*
    factor   := '-' factor | 'next' factor | number | call | variable | '(' expr ')'

``next`` is value-level when the text parses as a comparison, temporal
otherwise; atoms are always tried first.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction

from . import ast as A

KEYWORDS = frozenset({
    "always", "eventually", "next", "until", "and", "or", "not", "implies",
    "iff", "true", "false", "min", "max", "floor", "ceil", "abs",
})

_IDENT = r"[A-Za-z_][A-Za-z0-9_]*"
_SUBSCRIPT = r"\[\s*(?:'[^']*'|\"[^\"]*\"|\d+)\s*\]"
_TOKEN_RE = re.compile(
    rf"""
    (?P<ws>\s+)
  | (?P<num>\d+/\d+|\d+(?:\.\d+)?)
  | (?P<name>{_IDENT}(?:\.{_IDENT})*(?:{_SUBSCRIPT})*)
  | (?P<op><=|>=|==|!=|<|>|=|\+|-|\*|/|\(|\)|,)
    """,
    re.VERBOSE,
)
_SUB_RE = re.compile(_SUBSCRIPT)


class ParseError(ValueError):
    def __init__(self, text: str, line: int, col: int, expected, found: str):
        self.line = line
        self.col = col
        self.expected = tuple(sorted(expected))
        self.found = found
        msg = f"line {line}, column {col}: unexpected {found}"
        if self.expected:
            msg += "; expected one of: " + ", ".join(self.expected)
        super().__init__(msg)


@dataclass(frozen=True)
class Token:
    kind: str  # num, var, kw, op, eof
    value: object
    offset: int
    line: int
    col: int

    def describe(self) -> str:
        if self.kind == "eof":
            return "end of input"
        if self.kind == "num":
            return f"number {self.text!r}"
        return repr(self.text)

    @property
    def text(self) -> str:
        if self.kind == "num":
            return str(self.value)
        return str(self.value)


def _canonical_path(raw: str) -> str:
    def fix(m):
        inner = m.group(0)[1:-1].strip()
        if inner[0] == '"' and "'" not in inner:
            inner = "'" + inner[1:-1] + "'"
        return "[" + inner + "]"
    return _SUB_RE.sub(fix, raw)


def tokenize(text: str) -> list:
    tokens = []
    pos, line, line_start = 0, 1, 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            raise ParseError(text, line, col, {"token"}, repr(text[pos]))
        kind = m.lastgroup
        s = m.group(0)
        if kind == "ws":
            nl = s.count("\n")
            if nl:
                line += nl
                line_start = pos + s.rindex("\n") + 1
        elif kind == "num":
            tokens.append(Token("num", Fraction(s), pos, line, col))
        elif kind == "name":
            if s in KEYWORDS:
                tokens.append(Token("kw", s, pos, line, col))
            else:
                tokens.append(Token("var", _canonical_path(s), pos, line, col))
        else:
            tokens.append(Token("op", "==" if s == "=" else s, pos, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", pos, line, pos - line_start + 1))
    return tokens


_CMP = frozenset(A.CMP_OPS)
_TEMPORAL_UNARY = {"not": A.Not, "always": A.Always, "eventually": A.Eventually}


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = tokenize(text)
        self.memo = {}
        self.far = 0
        self.expected = set()

    # -- helpers --
    def _miss(self, pos: int, what: str):
        if pos > self.far:
            self.far = pos
            self.expected = {what}
        elif pos == self.far:
            self.expected.add(what)
        return None

    def _is(self, pos: int, kind: str, value=None) -> bool:
        t = self.toks[pos]
        return t.kind == kind and (value is None or t.value == value)

    def _eat(self, pos: int, kind: str, value, label: str):
        if self._is(pos, kind, value):
            return pos + 1
        return self._miss(pos, label)

    def _memo(self, name, pos, fn):
        key = (name, pos)
        if key not in self.memo:
            self.memo[key] = fn(pos)
        return self.memo[key]

    # -- formulas --
    def formula(self, pos):
        return self._memo("formula", pos, self._formula)

    def _formula(self, pos):
        r = self.or_f(pos)
        if r is None:
            return None
        left, p = r
        for kw, cls in (("implies", A.Implies), ("iff", A.Iff)):
            if self._is(p, "kw", kw):
                rr = self.formula(p + 1)
                if rr is None:
                    return None
                return cls(left, rr[0]), rr[1]
        self._miss(p, "'implies'")
        self._miss(p, "'iff'")
        return left, p

    def or_f(self, pos):
        return self._chain(pos, "or", A.Or, self.and_f)

    def and_f(self, pos):
        return self._chain(pos, "and", A.And, self.until_f)

    def _chain(self, pos, kw, cls, sub):
        r = sub(pos)
        if r is None:
            return None
        left, p = r
        while True:
            if not self._is(p, "kw", kw):
                self._miss(p, repr(kw))
                return left, p
            rr = sub(p + 1)
            if rr is None:
                return None
            left, p = cls(left, rr[0]), rr[1]

    def until_f(self, pos):
        r = self.unary_f(pos)
        if r is None:
            return None
        left, p = r
        if self._is(p, "kw", "until"):
            rr = self.until_f(p + 1)
            if rr is None:
                return None
            return A.Until(left, rr[0]), rr[1]
        self._miss(p, "'until'")
        return left, p

    def unary_f(self, pos):
        return self._memo("unary_f", pos, self._unary_f)

    def _unary_f(self, pos):
        t = self.toks[pos]
        if t.kind == "kw" and t.value in _TEMPORAL_UNARY:
            r = self.unary_f(pos + 1)
            if r is None:
                return None
            return _TEMPORAL_UNARY[t.value](r[0]), r[1]
        if t.kind == "kw" and t.value == "next":
            a = self.atom(pos)
            if a is not None:
                return a
            r = self.unary_f(pos + 1)
            if r is None:
                return None
            return A.Next(r[0]), r[1]
        return self.primary_f(pos)

    def primary_f(self, pos):
        a = self.atom(pos)
        if a is not None:
            return a
        t = self.toks[pos]
        if t.kind == "op" and t.value == "(":
            r = self.formula(pos + 1)
            if r is not None:
                p = self._eat(r[1], "op", ")", "')'")
                if p is not None:
                    return r[0], p
            return None
        if t.kind == "kw" and t.value in ("true", "false"):
            return A.BoolConst(t.value == "true"), pos + 1
        if t.kind == "var":
            return A.Prop(t.value), pos + 1
        for what in ("'('", "'true'", "'false'", "'not'", "'always'", "'eventually'", "'next'"):
            self._miss(pos, what)
        return None

    def atom(self, pos):
        return self._memo("atom", pos, self._atom)

    def _atom(self, pos):
        r = self.expr(pos)
        if r is None:
            return None
        left, p = r
        t = self.toks[p]
        if not (t.kind == "op" and t.value in _CMP):
            return self._miss(p, "comparison operator")
        rr = self.expr(p + 1)
        if rr is None:
            return None
        return A.Atom(t.value, left, rr[0]), rr[1]

    # -- expressions --
    def expr(self, pos):
        return self._memo("expr", pos, lambda q: self._binary(q, ("+", "-"), self.term))

    def term(self, pos):
        return self._memo("term", pos, lambda q: self._binary(q, ("*", "/"), self.factor))

    def _binary(self, pos, ops, sub):
        r = sub(pos)
        if r is None:
            return None
        left, p = r
        while True:
            t = self.toks[p]
            if not (t.kind == "op" and t.value in ops):
                for o in ops:
                    self._miss(p, repr(o))
                return left, p
            rr = sub(p + 1)
            if rr is None:
                return None
            left, p = A.BinOp(t.value, left, rr[0]), rr[1]

    def factor(self, pos):
        return self._memo("factor", pos, self._factor)

    def _factor(self, pos):
        t = self.toks[pos]
        if t.kind == "op" and t.value == "-":
            r = self.factor(pos + 1)
            return None if r is None else (A.Neg(r[0]), r[1])
        if t.kind == "kw" and t.value == "next":
            r = self.factor(pos + 1)
            return None if r is None else (A.NextVal(r[0]), r[1])
        if t.kind == "num":
            return A.Const(t.value), pos + 1
        if t.kind == "var":
            return A.Var(t.value), pos + 1
        if t.kind == "kw" and t.value in A.FUNCTIONS:
            p = self._eat(pos + 1, "op", "(", "'('")
            if p is None:
                return None
            args = []
            while True:
                r = self.expr(p)
                if r is None:
                    return None
                args.append(r[0])
                p = r[1]
                if self._is(p, "op", ","):
                    p += 1
                    continue
                self._miss(p, "','")
                p = self._eat(p, "op", ")", "')'")
                if p is None:
                    return None
                break
            arity = A.FUNCTIONS[t.value]
            if len(args) != arity:
                return self._miss(pos, f"{t.value} with {arity} argument(s)")
            return A.Call(t.value, tuple(args)), p
        if t.kind == "op" and t.value == "(":
            r = self.expr(pos + 1)
            if r is None:
                return None
            p = self._eat(r[1], "op", ")", "')'")
            return None if p is None else (r[0], p)
        for what in ("number", "variable", "'('", "'-'", "function call"):
            self._miss(pos, what)
        return None

    # -- entry points --
    def run(self, rule):
        r = rule(0)
        if r is not None and self.toks[r[1]].kind == "eof":
            return r[0]
        if r is not None:
            self._miss(r[1], "end of input")
        tok = self.toks[self.far]
        raise ParseError(self.text, tok.line, tok.col, self.expected, tok.describe())


def parse_formula(text: str) -> A.Formula:
    """Parse contract-language text into a formula AST.

    Raises ParseError with line, column and the expected-token set at the
    farthest point the parser reached.
    """
    p = _Parser(text)
    return p.run(p.formula)


def parse_expr(text: str) -> A.Expr:
    p = _Parser(text)
    return p.run(p.expr)
