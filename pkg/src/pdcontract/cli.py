"""Command-line front end.

::

    pdcontract rates    --scenario S [--epsilon E] [--rho R]
    pdcontract simulate --scenario S [--h H] [--T T] [--out F] [--format csv|json]
    pdcontract track    --scenario S [--out F]
    pdcontract verify   [--scenario S] [--jobs J]

Without ``--scenario``, ``verify`` runs every built-in demo scenario plus the
saddle-matrix Hurwitz suite. Exit status: 0 when everything passes, 1 when a
check fails, 2 on bad input or a violated assumption.

CSV headers
-----------
simulate: ``t,weighted_error,euclidean_error,kkt_residual[,dual_sum_drift],envelope``
track:    ``t,weighted_error,bound,margin`` followed by one ``#`` summary line
"""

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import pipeline
from .errors import AssumptionViolation, DivergenceError, PDContractError
from .scenarios import ScenarioError, builtin_scenarios, load_scenario

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def format_csv(header, rows, footer=None):
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(f"{v:.12e}" for v in row) + "\n")
    if footer:
        buf.write("# " + " ".join(f"{k}={_fmt(v)}" for k, v in footer.items()) + "\n")
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.12e}"
    return str(v)


def format_json(obj):
    return json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n"


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, np.generic):
        return v.item()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _scenario(args):
    sc = load_scenario(args.scenario)
    return sc.with_overrides(epsilon=args.epsilon, rho=args.rho, h=args.h, T=args.T, seed=args.seed)


def cmd_rates(args):
    report = pipeline.rates(_scenario(args))
    if args.format == "csv":
        keys = [k for k, v in report.items() if isinstance(v, (int, float)) and not isinstance(v, bool)]
        _emit(format_csv(keys, [[report[k] for k in keys]]), args.out)
    else:
        _emit(format_json(report), args.out)
    return EXIT_OK


def cmd_simulate(args):
    sc = _scenario(args)
    try:
        header, rows, report = pipeline.simulate(sc)
    except DivergenceError as exc:
        if args.out and exc.states is not None:
            Path(args.out).write_text(format_csv(
                ["t"] + [f"z_{i}" for i in range(exc.states.shape[1])],
                np.column_stack([exc.times, exc.states])))
        raise
    if args.format == "json":
        _emit(format_json({**report, "columns": header, "rows": rows}), args.out)
    else:
        _emit(format_csv(header, rows), args.out)
        if args.out:
            print(format_json(report), end="", file=sys.stderr)
    return EXIT_OK


def cmd_track(args):
    header, rows, summary = pipeline.track(_scenario(args))
    if args.format == "json":
        _emit(format_json({**summary, "columns": header, "rows": rows}), args.out)
    else:
        footer = {k: summary[k] for k in ("max_violation", "slack", "tracking_rho", "c", "pass")}
        _emit(format_csv(header, rows, footer), args.out)
    return EXIT_OK if summary["pass"] else EXIT_FAIL


def _verify_one(path, overrides):
    try:
        sc = load_scenario(path).with_overrides(**overrides)
        return pipeline.verify(sc)
    except (AssumptionViolation, ScenarioError) as exc:
        return {"scenario": Path(path).name, "error": str(exc), "pass": False, "input_error": True}


def cmd_verify(args):
    overrides = dict(epsilon=args.epsilon, rho=args.rho, h=args.h, T=args.T, seed=args.seed)
    paths = [args.scenario] if args.scenario else builtin_scenarios()
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(lambda p: _verify_one(p, overrides), paths))
    if not args.scenario:
        reports.append(pipeline.verify_saddle_suite())
    if args.format == "json":
        _emit(format_json(reports if len(reports) > 1 else reports[0]), args.out)
    else:
        _emit(_verify_text(reports), args.out)
    if any(r.get("input_error") for r in reports) and args.scenario:
        return EXIT_INPUT
    return EXIT_OK if all(r["pass"] for r in reports) else EXIT_FAIL


def _verify_text(reports):
    lines = []
    for r in reports:
        head = f"[{'PASS' if r['pass'] else 'FAIL'}] {r['scenario']}"
        if "c" in r:
            head += f" (kind={r['kind']}, c={r['c']:.6g})"
        lines.append(head)
        if "error" in r:
            lines.append(f"    error: {r['error']}")
        for ch in r.get("checks", []):
            if ch.get("skipped"):
                lines.append(f"    SKIP {ch['name']}: {ch['reason']}")
                continue
            mark = "ok  " if ch["pass"] else "FAIL"
            lines.append(f"    {mark} {ch['name']}: {ch['value']:.6g} {ch['sense']} {ch['threshold']:.6g}")
    return "\n".join(lines) + "\n"


def build_parser():
    parser = argparse.ArgumentParser(prog="pdcontract",
                                     description="Contraction certificates for primal-dual dynamics")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, needs in [("rates", cmd_rates, True), ("simulate", cmd_simulate, True),
                            ("track", cmd_track, True), ("verify", cmd_verify, False)]:
        p = sub.add_parser(name)
        p.add_argument("--scenario", required=needs, help="scenario JSON file")
        p.add_argument("--epsilon", type=float)
        p.add_argument("--rho", type=float, help="augmentation gain")
        p.add_argument("--h", type=float, help="RK4 step size")
        p.add_argument("--T", type=float, help="horizon")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output file (default stdout)")
        p.add_argument("--format", choices=("csv", "json", "text") if name == "verify" else ("csv", "json"),
                       default="json" if name == "rates" else ("text" if name == "verify" else "csv"))
        if name == "verify":
            p.add_argument("--jobs", type=int, default=1, help="scenarios verified concurrently")
        p.set_defaults(func=fn)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except AssumptionViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ScenarioError, ValueError, PDContractError) as exc:
        if isinstance(exc, DivergenceError):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_FAIL
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
