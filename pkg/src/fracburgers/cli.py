"""Command line entry point: ``fracburgers {run,solve,verify,kernel,report}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_ABORT = 0, 1, 2, 3


def _scenario(args):
    from . import config

    if args.config and args.scenario:
        raise config.ConfigError(["give either --config or --scenario, not both"])
    if args.config:
        return config.load(args.config)
    if args.scenario:
        return config.preset(args.scenario)
    raise config.ConfigError(["a scenario is required: --config FILE or --scenario NAME"])


def _add_scenario_args(p):
    p.add_argument("--config", help="scenario file (key = value lines)")
    p.add_argument("--scenario", help="bundled preset name, e.g. critical-1d")
    p.add_argument("--out", help="output directory (default out/<scenario name>)")


def _out(args, scn):
    return Path(args.out) if args.out else Path("out") / scn.name


def _summary(report):
    for c in report.checks:
        print(f"{c.check}: {c.status.upper()}")
    print(f"{report.scenario}: {'PASS' if report.passed else 'FAIL'}")


def cmd_run(args):
    from . import runner

    scn = _scenario(args)
    report = runner.run(scn, _out(args, scn), checks=args.check or None)
    _summary(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_solve(args):
    from . import runner

    scn = _scenario(args)
    out = _out(args, scn)
    report = runner.run(scn, out, solve_only=True)
    print(f"wrote {out / 'fields'} ({report.diagnostics.get('steps', 0)} steps)")
    return EXIT_OK


def cmd_verify(args):
    from . import runner

    scn = _scenario(args)
    existing = None
    if args.trajectory:
        existing = Path(args.trajectory)
        if not any((existing / "fields").glob("field_*.csv")):
            print(f"error: no field CSVs in {existing}; run `solve` first", file=sys.stderr)
            return EXIT_INVALID
    report = runner.run(scn, _out(args, scn), checks=args.check or None, existing=existing)
    if args.check and len(report.checks) == 1:
        print(json.dumps(report.checks[0].to_json(), indent=2))
    _summary(report)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_kernel(args):
    from . import kernel, runner

    params = kernel.StabilityParams(args.alpha, args.d)
    tab = kernel.density_profile(params, args.n_points, args.r_max)
    rows = []
    for t in args.t:
        scale = t ** (-1.0 / args.alpha)
        p = t ** (-args.d / args.alpha) * tab["p"]
        dp = t ** (-(args.d + 1) / args.alpha) * tab["dp_dr"]
        r = tab["r"] / scale
        rows += [(args.alpha, args.d, t, ri, pi, di) for ri, pi, di in zip(r, p, dp)]
    text = runner.csv_text(["alpha", "d", "t", "r", "p", "dp_dr"], rows)
    if args.out:
        runner.atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_report(args):
    from . import runner

    out = Path(args.directory)
    if not (out / "checks").is_dir():
        print(f"error: {out} has no checks/ directory; run `run` or `verify` first", file=sys.stderr)
        return EXIT_INVALID
    for p in runner.render_report(out):
        print(p)
    return EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="fracburgers", description=__doc__)
    ap.add_argument("--threads", type=int, help="FFT worker threads (else FRACBURGERS_THREADS)")
    ap.add_argument("--seed", type=int, default=0,
                    help="seed for randomized sampling in property tests; never affects solver results")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="solve, verify and write the full report")
    _add_scenario_args(p)
    p.add_argument("--check", action="append", help="restrict to this check (repeatable)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("solve", help="run only the trajectory")
    _add_scenario_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="run checks on a fresh or existing trajectory")
    _add_scenario_args(p)
    p.add_argument("--check", action="append", help="check name (repeatable)")
    p.add_argument("--trajectory", help="output directory of an earlier solve")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("kernel", help="dump a kernel table as CSV")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--t", type=float, nargs="+", default=[1.0])
    p.add_argument("--n-points", type=int, default=201)
    p.add_argument("--r-max", type=float, default=20.0)
    p.add_argument("--out", help="CSV path (default stdout)")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("report", help="re-render SVG plots from existing CSVs")
    p.add_argument("directory")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    from .config import ConfigError
    from .grid import GridError
    from .kernel import DomainError
    from .solver import NumericalAbort, SolverConfigError

    args = build_parser().parse_args(argv)
    if args.threads is not None:
        os.environ["FRACBURGERS_THREADS"] = str(args.threads)
    np.random.seed(args.seed)
    try:
        return args.func(args)
    except (ConfigError, SolverConfigError) as exc:
        problems = getattr(exc, "problems", None) or getattr(exc, "violations", None) or [str(exc)]
        for msg in problems:
            print(f"error: {msg}", file=sys.stderr)
        return EXIT_INVALID
    except (DomainError, GridError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
