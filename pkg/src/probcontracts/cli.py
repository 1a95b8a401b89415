"""Command-line front end.

    probcontracts verify SPEC [--seed N] [--samples N | --seconds S] [--out DIR]
    probcontracts case EVIDENCE.json [--out FILE]
    probcontracts table [--budgets 500,1000,5000] [--seed N] [--out FILE]
    probcontracts replay TRACE_LOG.jsonl
    probcontracts selftest

SPEC is a campaign YAML file or one of the bundled names ``naive`` and
``optimized``. Exit codes: 0 success, 2 invalid input or render error,
3 top-level bound below the campaign's floor, 4 evidence not independent.
"""
from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time

from .algebra import IndependenceError
from .assurance import RenderOptions, export_json, import_json, percent, fixed4, render_case
from .evidence import OutcomeCache, calibrate_budget, replay_testing

EXIT_OK, EXIT_INVALID, EXIT_FLOOR, EXIT_INDEPENDENCE = 0, 2, 3, 4


def _fail(msg: str, code: int = EXIT_INVALID) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def _render_opts(args) -> RenderOptions:
    return RenderOptions(max_width=args.max_width, include_timing=args.timing,
                         gap_style=args.gap_style)


def _csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _calibrated_samples(spec: dict, seconds: float) -> int:
    from .aeb.campaign import COMPONENTS
    from .aeb.catalog import build_contract_catalog
    from .aeb.model import AebScenario
    from .aeb import dynamics as D

    catalog = build_contract_catalog()
    for src in spec["sources"].values():
        kind, body = next(iter(src.items()))
        if kind in ("test", "weak_merge_tested"):
            contract = catalog[body.get("contract") or body["tested"]]
            component = COMPONENTS[body.get("component", "Car")]()
            params = (spec.get("scenario") or {}).get("params") or {}
            return calibrate_budget(seconds, AebScenario(D.AebParams(**params)), component,
                                    contract, spec["seed"])
    raise ValueError("--seconds needs a spec with at least one testing source")


def cmd_verify(args) -> int:
    from .aeb.campaign import SpecError, apply_overrides, execute_spec, load_spec, validate_spec

    try:
        spec = apply_overrides(load_spec(args.spec), seed=args.seed, samples=args.samples,
                               confidence=args.confidence, budget_unit=args.budget_unit)
        validate_spec(spec)
        if args.seconds is not None:
            spec["samples"] = _calibrated_samples(spec, args.seconds)
            spec["calibrated_from_seconds"] = args.seconds
        if args.trace_log:
            os.makedirs(args.trace_log, exist_ok=True)
        result = execute_spec(spec, args.workers, OutcomeCache(), args.reports, args.trace_log)
        case = render_case(result.evidence, _render_opts(args))
    except SpecError as exc:
        return _fail(str(exc))
    except IndependenceError as exc:
        return _fail(str(exc), EXIT_INDEPENDENCE)
    except ValueError as exc:
        return _fail(str(exc))

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "evidence.json"), "wb") as fh:
        fh.write(export_json(result.evidence))
    with open(os.path.join(args.out, "case.txt"), "w") as fh:
        fh.write(case)
    with open(os.path.join(args.out, "summary.csv"), "w") as fh:
        fh.write(_csv([result.summary()]))
    for name, e in result.reports.items():
        with open(os.path.join(args.out, f"report-{name}.txt"), "w") as fh:
            fh.write(render_case(e, _render_opts(args)))

    top = result.evidence
    print(f"{top.contract.name}: Minimum {percent(top.p)}, Confidence {fixed4(top.c)}")
    floor = spec.get("floor")
    if floor is not None and top.p < float(floor):
        print(f"bound {top.p!r} is below the floor {floor}", file=sys.stderr)
        return EXIT_FLOOR
    return EXIT_OK


def cmd_case(args) -> int:
    try:
        with open(args.evidence, "rb") as fh:
            e = import_json(fh.read())
        text = render_case(e, _render_opts(args))
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"cannot render {args.evidence}: {exc}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def sweep(budgets, seed: int, workers=None, budget_unit: str = "samples") -> list:
    """Both bundled pipelines at each budget; scene classifications are shared."""
    from .aeb.campaign import run_campaign

    cache = OutcomeCache()
    rows = []
    for b in budgets:
        row = {"budget": b}
        for mode in ("naive", "optimized"):
            t0 = time.perf_counter()
            r = run_campaign(mode, b, seed, workers, cache, budget_unit)
            row[f"{mode}_bound"] = r.evidence.p
            row[f"{mode}_confidence"] = r.evidence.c
            row[f"{mode}_seconds"] = round(time.perf_counter() - t0, 3)
        rows.append(row)
    return rows


def cmd_table(args) -> int:
    try:
        budgets = [int(b) for b in args.budgets.split(",")]
        rows = sweep(budgets, args.seed, args.workers, args.budget_unit)
    except ValueError as exc:
        return _fail(str(exc))
    text = _csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_replay(args) -> int:
    try:
        e = replay_testing(args.log, c=args.confidence)
    except (OSError, ValueError, KeyError) as exc:
        return _fail(f"cannot replay {args.log}: {exc}")
    sys.stdout.write(render_case(e))
    return EXIT_OK


def _selftest_binomial() -> bool:
    from .stats import clopper_pearson_lower, oracle_lower_bound

    for n in (1, 5, 20, 60):
        for k in range(n + 1):
            for c in (0.9, 0.99, 0.999):
                if abs(clopper_pearson_lower(k, n, c) - oracle_lower_bound(k, n, c)) > 1e-6:
                    return False
    return True


def _selftest_median() -> bool:
    import numpy as np

    from .aeb.dynamics import median3

    # any two readings within 0.1 of the truth force the median within 0.1 too
    grid = np.arange(0, 61) * 50         # 0..3 m in 0.05 m steps, as mm
    for t in grid:
        near = grid[np.abs(grid - t) <= 100]
        for d1 in near:
            for d2 in near:
                for d3 in grid:
                    if abs(median3(int(d1), int(d2), int(d3)) - int(t)) > 100:
                        return False
    return True


def _selftest_reachability() -> bool:
    from .aeb.reachability import reachable_check

    return reachable_check().safe


SELFTESTS = (
    ("binomial lower bound vs exact-tail oracle", _selftest_binomial),
    ("median of three stays in band (0.05 m grid)", _selftest_median),
    ("safety filter reachability", _selftest_reachability),
)


def cmd_selftest(args) -> int:
    ok = True
    for label, fn in SELFTESTS:
        t0 = time.perf_counter()
        passed = fn()
        ok &= passed
        print(f"{'PASS' if passed else 'FAIL'}  {label}  ({time.perf_counter() - t0:.1f}s)")
    return EXIT_OK if ok else 1


def _add_render_flags(p):
    p.add_argument("--max-width", type=int, default=None, help="wrap formulas at this width")
    p.add_argument("--timing", action="store_true", help="print wall-clock seconds for tests")
    p.add_argument("--gap-style", default="mean_minus_bound",
                   choices=("mean_minus_bound", "two_sided_width"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="probcontracts",
                                     description="Probabilistic assume-guarantee contracts.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="run a campaign spec and write evidence, case and summary")
    p.add_argument("spec", help="campaign YAML, or 'naive' / 'optimized'")
    p.add_argument("--seed", type=int)
    budget = p.add_mutually_exclusive_group()
    budget.add_argument("--samples", type=int, help="testing budget (overrides the campaign file)")
    budget.add_argument("--seconds", type=float, help="testing budget in wall-clock seconds, "
                        "converted once to a sample count")
    p.add_argument("--budget-unit", choices=("samples", "simulations"))
    p.add_argument("--confidence", type=float)
    p.add_argument("--workers", type=int, default=None,
                   help="trace-generation processes (default: $PROBCONTRACTS_WORKERS or 1)")
    p.add_argument("--out", default="out", help="output directory")
    p.add_argument("--reports", action="store_true", help="also evaluate the campaign's reports")
    p.add_argument("--trace-log", metavar="DIR", help="write a JSONL trace log per test source")
    _add_render_flags(p)
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("case", help="render a stored evidence tree")
    p.add_argument("evidence")
    p.add_argument("--out")
    _add_render_flags(p)
    p.set_defaults(fn=cmd_case)

    p = sub.add_parser("table", help="CSV of both bundled pipelines over a budget sweep")
    p.add_argument("--budgets", default="500,1000,5000")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--budget-unit", choices=("samples", "simulations"), default="samples")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_table)

    p = sub.add_parser("replay", help="re-evaluate a trace log without simulating")
    p.add_argument("log")
    p.add_argument("--confidence", type=float)
    p.set_defaults(fn=cmd_replay)

    p = sub.add_parser("selftest", help="run the built-in oracle checks")
    p.set_defaults(fn=cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
