"""Command line entry point.

Three subcommands:

  run     execute one experiment config, print its JSON report
  sweep   re-run an experiment along one numeric parameter axis
  verify  run the built-in self-checks

Exit codes: 0 success, 1 verification failures, 2 bad configuration,
3 resource or accuracy limits hit while computing.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import AccuracyError, CapacityError, ConfigError
from .experiments import load_experiment, run_experiment, sweep


def _parse_values(text):
    values = []
    for piece in text.split(","):
        piece = piece.strip()
        if not piece:
            raise ConfigError("empty value in --values list")
        try:
            values.append(int(piece))
        except ValueError:
            try:
                values.append(float(piece))
            except ValueError:
                raise ConfigError(f"--values entry {piece!r} is not a number") from None
    return values


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fraglab",
        description="Mantissa statistics of fragmentation processes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute one experiment config")
    p_run.add_argument("config", help="path to a JSON experiment document")
    p_run.add_argument(
        "--no-figures", action="store_true",
        help="write delimited output only, skip the rendered figure",
    )

    p_sweep = sub.add_parser("sweep", help="run an experiment along one axis")
    p_sweep.add_argument("config", help="path to a JSON experiment document")
    p_sweep.add_argument("--axis", required=True, help="params field to vary")
    p_sweep.add_argument(
        "--values", required=True,
        help="comma separated numbers substituted into the axis field",
    )
    p_sweep.add_argument(
        "--no-figures", action="store_true",
        help="write delimited output only, skip the rendered figure",
    )

    sub.add_parser("verify", help="run built-in self-checks")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            exp = load_experiment(args.config)
            report = run_experiment(exp, figures=not args.no_figures)
            json.dump(report, sys.stdout, indent=2)
            sys.stdout.write("\n")
            return 0
        if args.command == "sweep":
            exp = load_experiment(args.config)
            values = _parse_values(args.values)
            rows, header = sweep(exp, args.axis, values, figures=not args.no_figures)
            if not exp.output_path:
                from .experiments import write_rows_csv

                write_rows_csv(rows, header, sys.stdout)
            else:
                print(f"wrote {len(rows)} rows to {exp.output_path}")
            return 0
        if args.command == "verify":
            from .verify import run_verification

            failures = run_verification()
            return 0 if failures == 0 else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CapacityError, AccuracyError) as exc:
        print(f"limit reached: {exc}", file=sys.stderr)
        return 3
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
