"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 model data error,
4 filesystem error, 5 a chain failed while sampling, 6 compared runs are
not comparable.
"""

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from .experiment import ConfigError, DataError, compare, load_config, run_experiment

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_FILESYSTEM = 4
EXIT_RUN = 5
EXIT_MISMATCH = 6


def _cmd_run(args):
    try:
        config = load_config(args.config)
    except FileNotFoundError as exc:
        print(f"error: config file not found: {exc.filename}", file=sys.stderr)
        return EXIT_FILESYSTEM
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    overrides = {k: v for k, v in (("chains", args.chains), ("seed", args.seed),
                                   ("workers", args.workers), ("out", args.out))
                 if v is not None}
    config = dataclasses.replace(config, **overrides)
    try:
        rows = run_experiment(config)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"filesystem error: {exc}", file=sys.stderr)
        return EXIT_FILESYSTEM
    except Exception as exc:  # a chain blew up
        logging.getLogger(__name__).exception("chain failed")
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN
    for row in rows:
        print(f"chain {row['chain']}: min ESS/L {row['ess_per_leapfrog_min']:.4g}"
              f"  median {row['ess_per_leapfrog_median']:.4g}"
              f"  max {row['ess_per_leapfrog_max']:.4g}")
    print(f"wrote {config.out}")
    return EXIT_OK


def _cmd_compare(args):
    try:
        text, problems = compare(args.runs)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FILESYSTEM
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    for problem in problems:
        print(f"warning: {problem}", file=sys.stderr)
    return EXIT_MISMATCH if problems else EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adahmc",
        description="Adaptive Hamiltonian Monte Carlo experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the chains described by a config")
    run.add_argument("config", help="YAML experiment config")
    run.add_argument("--chains", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--workers", type=int)
    run.add_argument("--out", help="output directory")
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="tabulate ESS/L of finished runs")
    cmp_.add_argument("runs", nargs="+", help="run directories")
    cmp_.add_argument("--out", help="write the CSV here instead of stdout")
    cmp_.set_defaults(func=_cmd_compare)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    if args.command == "compare" and len(args.runs) < 2:
        parser.error("compare needs at least two run directories")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
