"""The contract property language: syntax, evaluation, and contracts."""
from . import ast
from .ast import (
    Always, And, Atom, BinOp, BoolConst, Call, Const, Eventually, FALSE, Iff,
    Implies, Neg, Next, NextVal, Not, Or, Prop, TRUE, Until, Var,
)
from .contract import (
    Contract, MissingVariableError, Outcome, satisfies, statically_decidable,
)
from .jsonform import formula_from_json, formula_to_json
from .parser import ParseError, parse_expr, parse_formula
from .render import format_number, render
from .semantics import (
    Diagnostics, TableTrace, TruthValue, eval_expr, eval_formula, evaluate,
    evaluate_single_steps, holds, reference_eval, reference_expr, to_rational,
)
from .simplify import simplify

__all__ = [
    "ast", "Always", "And", "Atom", "BinOp", "BoolConst", "Call", "Const",
    "Eventually", "FALSE", "Iff", "Implies", "Neg", "Next", "NextVal", "Not",
    "Or", "Prop", "TRUE", "Until", "Var", "Contract", "MissingVariableError",
    "Outcome", "satisfies", "statically_decidable", "formula_from_json",
    "formula_to_json", "ParseError", "parse_expr", "parse_formula",
    "format_number", "render", "Diagnostics", "TableTrace", "TruthValue",
    "eval_expr", "eval_formula", "evaluate", "evaluate_single_steps", "holds", "reference_eval",
    "reference_expr", "to_rational", "simplify",
]
