"""Textual assurance cases and JSON export for evidence trees."""
from __future__ import annotations

import json
import textwrap
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Optional

from .evidence import Evidence, EvidenceKind
from .lang import ast as A
from .lang.render import render
from .stats import clopper_pearson_two_sided

SCHEMA = "probcontracts.evidence"
SCHEMA_VERSION = 1

GAP_STYLES = ("mean_minus_bound", "two_sided_width")


@dataclass(frozen=True)
class RenderOptions:
    """Layout knobs; output is a pure function of (evidence, options).

    ``max_width`` wraps long formula lines (continuations end in a
    backslash); ``abbreviate`` shortens formulas longer than that many
    characters. ``gap_style`` picks how the confidence gap is reported.
    """
    max_width: Optional[int] = None
    abbreviate: Optional[int] = None
    indent: int = 2
    include_timing: bool = False
    gap_style: str = "mean_minus_bound"

    def __post_init__(self):
        if self.gap_style not in GAP_STYLES:
            raise ValueError(f"gap_style must be one of {GAP_STYLES}")
        if self.max_width is not None and self.max_width < 20:
            raise ValueError("max_width must be at least 20")


def percent(p: float) -> str:
    """Two-decimal percentage, half-up on the stored binary value."""
    return str((Decimal(p) * 100).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))


def fixed4(x: float) -> str:
    return str(Decimal(x).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


KIND_TITLES = {
    EvidenceKind.COMPOSED: "Composition Result:",
    EvidenceKind.CONJOINED: "Conjunction Result:",
    EvidenceKind.STRONG_MERGED: "Strong Merge Result:",
    EvidenceKind.WEAK_MERGED: "Weak Merge Result:",
}


class _Writer:
    def __init__(self, opts: RenderOptions):
        self.opts = opts
        self.lines = []

    def line(self, depth: int, text: str):
        self.lines.append(" " * (self.opts.indent * depth) + text)

    def formula(self, depth: int, f: A.Formula):
        text = render(f)
        o = self.opts
        if o.abbreviate is not None and len(text) > o.abbreviate:
            text = text[:o.abbreviate].rstrip() + " (...)"
        pad = " " * (o.indent * depth)
        if o.max_width is None or len(pad) + len(text) <= o.max_width:
            self.lines.append(pad + text)
            return
        width = max(o.max_width - len(pad) - 2, 10)
        parts = textwrap.wrap(text, width=width, break_long_words=False, break_on_hyphens=False,
                              subsequent_indent="    ")
        for i, part in enumerate(parts):
            self.lines.append(pad + part + (" \\" if i < len(parts) - 1 else ""))


def _spine(f: A.Formula) -> list:
    """Top-level conjuncts along the left spine, right operands kept whole."""
    items = []
    while isinstance(f, A.And):
        items.append(f.right)
        f = f.left
    items.append(f)
    return items[::-1]


def _formula_block(w: _Writer, depth: int, title: str, f: A.Formula):
    w.line(depth, title)
    if f == A.TRUE:
        w.line(depth + 1, "None")
        return
    items = _spine(f)
    for item in items if len(items) >= 3 else [f]:
        w.formula(depth + 1, item)


def _flatten(e: Evidence, kind: EvidenceKind) -> list:
    if e.kind is kind:
        return [x for ch in e.children for x in _flatten(ch, kind)]
    return [e]


def _subject(e: Evidence) -> str:
    return e.meta.get("subject") or e.meta.get("component") or e.contract.name


def _testing_lines(w: _Writer, depth: int, e: Evidence):
    o, m = e.outcome, e.meta
    w.line(depth, f"Sampled from Scenario '{m.get('scenario', '?')}' (Hash={m.get('scenario_hash', '?')})"
                  f", seed {m.get('seed')}, stream '{m.get('stream')}'")
    w.line(depth, f"{o.n_verified} Verified,  {o.n_rejected} Rejected,  "
                  f"{o.n_a_violated} A-Violated,  {o.n_g_violated} G-Violated")
    if o.n_aborted or o.n_excluded:
        w.line(depth, f"{o.n_aborted} Aborted,  {o.n_excluded} Excluded (not counted)")
    cost = f"{o.n_sampled} Samples, {o.simulated_steps} Simulated Steps"
    if w.opts.include_timing:
        cost += f", {o.wall_seconds:.2f} Seconds"
    w.line(depth, cost)
    if o.n_effective:
        mean = o.k / o.n_effective
        w.line(depth, f"Mean Correctness: {percent(mean)}%")
        if w.opts.gap_style == "two_sided_width":
            lo, hi = clopper_pearson_two_sided(o.k, o.n_effective, e.c)
            w.line(depth, f"Confidence Gap (two-sided interval width): {fixed4(hi - lo)}")
        else:
            w.line(depth, f"Confidence Gap (mean - minimum): {fixed4(max(0.0, mean - e.p))}")


def _witness_line(e: Evidence) -> str:
    wt = e.witness
    d = wt.detail
    text = f"Refinement Method: {wt.method}"
    if "checker_id" in d:
        text += f" ({d['checker_id']}, certificate {d.get('certificate_id')})"
    return text


def _node(w: _Writer, depth: int, e: Evidence):
    probabilistic = e.bound.as_tuple() != (1.0, 1.0)
    w.line(depth, "Probabilistic Contract Result:" if probabilistic else "Contract Result:")
    w.line(depth + 1, f"Contract: {e.contract.name}")
    w.line(depth + 1, f"Component: {_subject(e)}")
    if probabilistic:
        w.line(depth + 1, f"Minimum {percent(e.p)}")
        w.line(depth + 1, f"Confidence {fixed4(e.c)}")
    _formula_block(w, depth + 1, "Assumptions:", e.contract.assumptions)
    _formula_block(w, depth + 1, "Guarantees:", e.contract.guarantees)
    w.line(depth + 1, "Evidence:")
    _evidence(w, depth + 2, e)


def _evidence(w: _Writer, depth: int, e: Evidence):
    k = e.kind
    if k is EvidenceKind.ASSUMPTION:
        w.line(depth, "Assumed")
        w.line(depth, f"Justification: {e.meta['justification']} (not verified by this tool)")
    elif k is EvidenceKind.PROOF:
        verdict = "accepted" if e.p == 1.0 else "rejected"
        w.line(depth, f"Proof: checker {e.meta.get('checker_id')}, certificate "
                      f"{e.meta['certificate_id']}, {verdict}")
        if e.meta.get("scope"):
            w.line(depth, f"Scope: {e.meta['scope']}")
        if e.meta.get("diagnostic"):
            w.line(depth, f"Diagnostic: {e.meta['diagnostic']}")
    elif k is EvidenceKind.TEST:
        w.line(depth, "Simulation-Based Testing")
        _testing_lines(w, depth, e)
    elif k is EvidenceKind.WEAK_MERGE_TESTED:
        w.line(depth, "Testing-Based Weak Merge")
        _testing_lines(w, depth, e)
        w.line(depth, f"Static Passes: {e.outcome.n_static_pass} (initial scene in the proved "
                      "region, not simulated)")
        for ch in e.children:
            _node(w, depth, ch)
    elif k is EvidenceKind.REFINED:
        w.line(depth, _witness_line(e))
        scope = e.witness.detail.get("scope")
        if scope:
            w.line(depth, f"Refinement Scope: {scope}")
        child = e.children[0]
        if child.kind in KIND_TITLES:
            _combined(w, depth, child)
        else:
            _node(w, depth, child)
    else:
        _node(w, depth, e) if k not in KIND_TITLES else _combined(w, depth, e)


def _combined(w: _Writer, depth: int, e: Evidence):
    title = KIND_TITLES[e.kind]
    if e.kind is EvidenceKind.WEAK_MERGED:
        w.line(depth, f"{title} P(A1) = {e.meta['p_a1']} ({e.meta['p_a1_source']})")
        w.line(depth, f"Minimum {percent(e.p)}, Confidence {fixed4(e.c)}")
        for ch in e.children:
            w.line(depth, f"Sub Result (Correctness={ch.p:.2f}):")
            _node(w, depth, ch)
        return
    parts = _flatten(e, e.kind)
    w.line(depth, f"{title} {len(parts)} parts, Minimum {percent(e.p)}, Confidence {fixed4(e.c)}")
    for ch in parts:
        _node(w, depth, ch)


def render_case(e: Evidence, opts: RenderOptions | None = None) -> str:
    """The evidence tree as an indented textual assurance case."""
    w = _Writer(opts or RenderOptions())
    if e.kind in KIND_TITLES:
        _combined(w, 0, e)
    else:
        _node(w, 0, e)
    return "\n".join(w.lines) + "\n"


def export_json(e: Evidence) -> bytes:
    doc = {"schema": SCHEMA, "version": SCHEMA_VERSION, "evidence": e.to_json()}
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()


def import_json(data) -> Evidence:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    doc = json.loads(data)
    if doc.get("schema") != SCHEMA:
        raise ValueError(f"not an evidence document (schema {doc.get('schema')!r})")
    if doc.get("version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {doc.get('version')!r}")
    return Evidence.from_json(doc["evidence"])
