"""Command-line entry point for scenario runs, sweeps, and oracle checks.

Exit codes: 0 success, 1 failed oracle check, 2 configuration error,
3 numerical failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from mcsa.baselines import brute_force
from mcsa.harness import emit, run_hop_sweep, run_load_sweep, run_mobility, run_static
from mcsa.ligd import NumericalError, li_gd
from mcsa.scenario import ConfigError, load_scenario
from mcsa.topology import load_trace

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcsa",
        description="Joint DNN split-point and edge resource allocation runs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, trace=False):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        if trace:
            p.add_argument("--trace", required=True, help="mobility trace JSON file")
        p.add_argument("--out", required=True, help="output file path")
        p.add_argument("--format", choices=("csv", "plot"), default="csv")
        p.add_argument("--seed", type=int, default=None,
                       help="override the scenario seed")

    common(sub.add_parser("static", help="compare all strategies without mobility"))
    common(sub.add_parser("mobility", help="replay a handover trace"), trace=True)
    common(sub.add_parser("hop-sweep", help="latency trends over hop counts"))
    common(sub.add_parser("load-sweep", help="latency trends over computing load"))

    oc = sub.add_parser("oracle-check", help="verify the solver against brute force")
    oc.add_argument("--scenario", required=True)
    oc.add_argument("--seed", type=int, default=None)
    oc.add_argument("--grid-b", type=int, default=200, help="bandwidth grid density")
    oc.add_argument("--grid-r", type=int, default=200, help="compute grid density")
    return parser


def _load(args):
    scenario = load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
        scenario.solver = dataclasses.replace(scenario.solver, seed=args.seed)
    return scenario


def _oracle_check(args) -> int:
    scenario = _load(args)
    eps = scenario.solver.accuracy_eps
    failed = False
    for spec in scenario.users:
        ctx, _ = scenario.context(spec)
        report = li_gd(ctx, scenario.solver)
        oracle = brute_force(ctx, args.grid_b, args.grid_r)
        tol = max(eps, 0.01 * abs(oracle.utility))
        gap = report.best.utility - oracle.utility
        ok = gap <= tol
        failed = failed or not ok
        print(f"{spec.user_id}: solver={report.best.utility:.6g} "
              f"oracle={oracle.utility:.6g} gap={gap:.3g} tol={tol:.3g} "
              f"{'OK' if ok else 'FAIL'}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            return _oracle_check(args)
        scenario = _load(args)
        if args.command == "static":
            rows = run_static(scenario)
        elif args.command == "mobility":
            rows = run_mobility(scenario, load_trace(args.trace))
        elif args.command == "hop-sweep":
            rows = run_hop_sweep(scenario)
        else:
            rows = run_load_sweep(scenario)
        emit(rows, args.out, args.format)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
