"""Command-line driver: ``sbfem run`` for convergence studies, ``sbfem verify`` for property suites.

Exit codes: 0 success, 1 configuration or I/O error, 2 numerical failure,
3 property violation.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .exceptions import ConfigError, SBFEMError
from .problems import PROBLEM_IDS
from .study import StudyConfig, emit_csv, emit_plot_data, estimate_rates, format_csv, load_config, run_study

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERICAL = 2
EXIT_PROPERTY = 3

log = logging.getLogger("sbfem")


def _build_parser():
    parser = argparse.ArgumentParser(prog="sbfem", description="Scaled boundary FEM for the Poisson problem on a sector.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every solved case")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study over orders and refinement levels")
    run.add_argument("--config", help="flat key=value file; flags below override it")
    run.add_argument("--problem", help=f"one of {', '.join(PROBLEM_IDS)}")
    run.add_argument("--orders", help="comma separated polynomial orders, e.g. 1,2,4,6")
    run.add_argument("--levels", help="comma separated element counts, strictly increasing")
    run.add_argument("--out", help="CSV output path (stdout when omitted)")
    run.add_argument("--plot-dir", dest="plot_dir", help="directory for per-series 'h error' files")
    run.add_argument("--quad-levels", dest="quad_levels", type=int, help="graded radial quadrature cells")
    run.add_argument("--theta-max", dest="theta_max", type=float, help="sector angle (custom problem only)")
    run.add_argument("--mode", type=int, help="angular mode number k (custom problem only)")
    run.add_argument("--timings", action="store_true", default=None, help="fill wall_time_ms (breaks byte-identical output)")

    sub.add_parser("verify", help="run the property suites")
    return parser


def _make_config(args) -> StudyConfig:
    overrides = {
        "problem": args.problem,
        "orders": args.orders,
        "levels": args.levels,
        "out": args.out,
        "plot_dir": args.plot_dir,
        "quad_levels": args.quad_levels,
        "theta_max": args.theta_max,
        "mode": args.mode,
        "timings": args.timings,
    }
    if args.config:
        return load_config(args.config, **overrides)
    return StudyConfig(**{k: v for k, v in overrides.items() if v is not None})


def _cmd_run(args) -> int:
    try:
        config = _make_config(args)
    except (ConfigError, TypeError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    done = []
    try:
        with np.errstate(over="raise", invalid="raise", divide="raise", under="ignore"):
            records = run_study(config, on_record=done.append)
    except (SBFEMError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure after {len(done)} case(s): {exc}", file=sys.stderr)
        if config.out and done:
            try:
                emit_csv(done, config.out)
                print(f"partial results written to {config.out}", file=sys.stderr)
            except OSError as io_exc:
                print(str(io_exc), file=sys.stderr)
        return EXIT_NUMERICAL

    try:
        if config.out:
            emit_csv(records, config.out)
        else:
            sys.stdout.write(format_csv(records))
        if config.plot_dir:
            emit_plot_data(records, config.plot_dir)
    except OSError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG

    if len(config.levels) >= 2:
        for (problem, p, norm), fit in estimate_rates(records).items():
            print(f"{problem} p={p} {norm}: slope {fit.slope:.3f} (R^2 {fit.r2:.5f}, {fit.n_points} levels)", file=sys.stderr)
    return EXIT_OK


def _cmd_verify(args) -> int:
    from .verification import run_all

    try:
        results = run_all()
    except (SBFEMError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for res in results:
        print(res.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} properties hold")
    return EXIT_PROPERTY if failed else EXIT_OK


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on bad usage; that slot means numerical failure here
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if args.command == "run":
        return _cmd_run(args)
    return _cmd_verify(args)


if __name__ == "__main__":
    sys.exit(main())
