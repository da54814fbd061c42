"""Command-line entry point: ``forestreturn <verb> <config.yaml>``."""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from . import runner
from .errors import ConfigurationError, DegenerateStandError, TableError, ThinningSpecError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_TABLE = 3
EXIT_DEGENERATE = 4


def _summary(results):
    for sr in results:
        p = sr.result.policy
        thin = "no thinning" if not p.thins else f"{len(sr.figure.thinnings)} thinning(s)"
        print(f"{sr.spec.species:6s} {sr.spec.planting_density:6.0f}/ha  rate {sr.result.rate:.4f}/yr  "
              f"rotation {p.rotation_months} months  {thin}  "
              f"maturity dbh {sr.figure.mean_dbh_cm[-1]:.1f} cm")


def _validate(config):
    for note in runner.validate_tables(config):
        print(note)
    print(f"ok: {len(config.stands)} stand(s), {config.search.size()} search points per stand")


COMMANDS = {
    "run": lambda c: _summary(runner.run(c)),
    "sweep-rotation": lambda c: _summary(runner.sweep_rotation(c)),
    "optimize": lambda c: _summary(runner.optimize_only(c)),
    "validate-tables": _validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="forestreturn",
        description="Optimize thinning and rotation of even-aged stands for capital return rate.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "optimize every stand and write all figure tables and the manifest",
        "sweep-rotation": "write expected rate against rotation age",
        "optimize": "write the optimal policy of every stand",
        "validate-tables": "load and cross-check the configured tables",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("config", help="YAML configuration file")
        p.add_argument("-o", "--output-dir", help="override output_dir of the config")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    warnings.simplefilter("default")
    try:
        config = runner.load_config(args.config)
        if args.output_dir:
            from pathlib import Path

            config.output_dir = Path(args.output_dir)
        COMMANDS[args.command](config)
    except TableError as exc:
        print(f"table error: {exc}", file=sys.stderr)
        return EXIT_TABLE
    except (ConfigurationError, ThinningSpecError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DegenerateStandError as exc:
        print(f"degenerate simulation: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
