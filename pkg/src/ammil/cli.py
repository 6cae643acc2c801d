"""Command-line front end: ``ammil {sweep,point,erli,legendre}``.

Exit codes: 0 success, 2 bad input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .amm import SolverError, SpecError, load_spec
from .il import erli_test, impermanent_loss
from .legendre import as_rates, eval_w, grad_w, legendre_transform, stable_state_at
from .stable_point import eval_f, grad_f

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
SWEEP_FAIL_FRACTION = 0.05


def _num(v):
    """Round to 12 significant digits for diffable output."""
    v = float(v)
    if not math.isfinite(v):
        return None
    return float(f"{v:.12g}") + 0.0


def _vec(a):
    return [_num(v) for v in np.asarray(a).ravel()]


def _fmt(v):
    v = float(v)
    if math.isnan(v):
        return "nan"
    return f"{v + 0.0:.12g}"


def _floats(text):
    try:
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text!r}")
    return v


def _envelope(spec, results, diagnostics=None):
    out = {"tool_version": __version__, "spec_echo": spec.to_dict()}
    out.update(results)
    if diagnostics is not None:
        out["diagnostics"] = diagnostics
    return out


def _state_residuals(state):
    return {"grad": _num(state.grad_residual), "level": _num(state.level_residual),
            "iterations": state.iterations, "method": state.method}


def cmd_sweep(args, out):
    spec = load_spec(args.spec)
    level = spec.resolve_level(args.level)
    q = spec.n - 1
    if not 1 <= args.axis <= q:
        raise SpecError(f"axis must be a non-numeraire token index in 1..{q}")
    if not args.t_min < args.t_max:
        raise SpecError("t-min must be below t-max")
    if args.steps < 2:
        raise SpecError("steps must be at least 2")
    if args.base_rates is None:
        if not spec.is_geometric:
            raise SpecError("--base-rates is required for specs whose IL depends on rate levels")
        base = np.ones(spec.n)
    else:
        base = as_rates(spec, args.base_rates)

    grid = (np.geomspace if args.scale == "log" else np.linspace)(args.t_min, args.t_max, args.steps)
    rows, failed = [], 0
    for t in grid:
        ratio = np.ones(spec.n)
        ratio[args.axis - 1] = t
        try:
            il = impermanent_loss(spec, level, base, base * ratio).il
        except SolverError as exc:
            print(f"warning: t={_fmt(t)}: {exc}", file=sys.stderr)
            il = float("nan")
            failed += 1
        rows.append(f"{_fmt(t)},{_fmt(il)}\n")
    out.write("t,il\n")
    out.writelines(rows)
    return EXIT_NUMERIC if failed >= SWEEP_FAIL_FRACTION * len(grid) and failed else EXIT_OK


def cmd_point(args, out):
    spec = load_spec(args.spec)
    level = spec.resolve_level(args.level)
    report = impermanent_loss(spec, level, args.p_init, args.p_final, method=args.method)
    results = {
        "il": _num(report.il),
        "v_hold": _num(report.v_hold),
        "v_pool": _num(report.v_pool),
        "x_initial": _vec(report.x_initial.x),
        "x_final": _vec(report.x_final.x),
        "t": _vec(report.t),
        "residuals": {"initial": _state_residuals(report.x_initial),
                      "final": _state_residuals(report.x_final)},
    }
    json.dump(_envelope(spec, results), out, indent=2)
    out.write("\n")
    return EXIT_OK


def _degree_rows(estimates):
    return [{"coordinate": e.coordinate + 1, "degree": _num(e.degree),
             "deviation": _num(e.max_log_deviation)} for e in estimates]


def cmd_erli(args, out):
    spec = load_spec(args.spec)
    level = spec.resolve_level(args.level)
    report = erli_test(spec, level, tolerance=args.tol)
    results = {
        "verdict": report.verdict.value,
        "direct_spread": _num(report.direct_spread),
        "f_degrees": _degree_rows(report.f_degrees),
        "w_degrees": _degree_rows(report.w_degrees),
        "tolerance": args.tol,
    }
    json.dump(_envelope(spec, results, report.diagnostics), out, indent=2)
    out.write("\n")
    return EXIT_OK


def cmd_legendre(args, out):
    spec = load_spec(args.spec)
    level = spec.resolve_level(args.level)
    m = as_rates(spec, args.m)
    state = stable_state_at(spec, level, m)
    results = {
        "w": _num(eval_w(spec, level, m)),
        "w_via_transform": _num(legendre_transform(spec, level, m)),
        "grad_w": _vec(grad_w(spec, level, m)),
        "stable_point": _vec(state.x),
        "f_at_point": _num(eval_f(spec, level, state.x_hat)),
        "grad_f": _vec(grad_f(spec, level, state.x_hat)),
    }
    json.dump(_envelope(spec, results, _state_residuals(state)), out, indent=2)
    out.write("\n")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="ammil", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--spec", required=True, help="AMM spec JSON file")
        p.add_argument("--level", type=_positive, default=None,
                       help="surface level: k for geometric pools, D for stableswap (defaults to the spec's d)")
        p.add_argument("--out", default="-", help="output path, '-' for stdout")

    p = sub.add_parser("sweep", help="IL along one rate-quotient axis, as CSV")
    common(p)
    p.add_argument("--axis", type=int, default=1, help="1-based token whose rate quotient varies")
    p.add_argument("--t-min", type=_positive, default=0.1)
    p.add_argument("--t-max", type=_positive, default=10.0)
    p.add_argument("--steps", type=int, default=101)
    p.add_argument("--scale", choices=("linear", "log"), default="log")
    p.add_argument("--base-rates", type=_floats, default=None,
                   help="initial exchange rates of tokens 1..n-1 against token n")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("point", help="IL report for one price move, as JSON")
    common(p)
    p.add_argument("--p-init", type=_floats, required=True)
    p.add_argument("--p-final", type=_floats, required=True)
    p.add_argument("--method", choices=("auto", "newton"), default="auto")
    p.set_defaults(func=cmd_point)

    p = sub.add_parser("erli", help="exchange-rate level independence test, as JSON")
    common(p)
    p.add_argument("--tol", type=_positive, default=1e-6)
    p.set_defaults(func=cmd_erli)

    p = sub.add_parser("legendre", help="value function and its dual at rates m, as JSON")
    common(p)
    p.add_argument("--m", type=_floats, required=True, help="rates of tokens 1..n-1 against token n")
    p.set_defaults(func=cmd_legendre)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.out == "-":
            return args.func(args, sys.stdout)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            return args.func(args, fh)
    except (SpecError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SolverError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
