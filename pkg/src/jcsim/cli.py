"""Command-line entry point: ``jcsim run | list-observables | version``."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .dynamics import IntegratorError
from .hilbert import TruncationError
from .measurement import ImpossibleOutcomeError
from .observables import UndefinedObservableError
from .scenario import ConfigError, bundled_scenarios, list_observables, load_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="jcsim", description="Jaynes-Cummings model scenario runner")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario config")
    run.add_argument("config", help="path to a JSON config, or a bundled scenario name (" + ", ".join(bundled_scenarios()) + ")")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--strict", action="store_true", help="turn truncation warnings into errors")
    run.add_argument("--dim", type=int, default=None, help="override the Fock truncation")

    sub.add_parser("list-observables", help="print the observable catalog")
    sub.add_parser("version", help="print the package version")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "version":
        print(__version__)
        return EXIT_OK
    if args.command == "list-observables":
        for name, (module, desc) in list_observables().items():
            print(f"{name}\t{module}\t{desc}")
        return EXIT_OK

    try:
        cfg = load_config(args.config)
        if args.dim is not None and args.dim < 2:
            raise ConfigError("--dim", "must be >= 2")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        manifest = run_scenario(cfg, args.out, strict=True if args.strict else None, dim=args.dim)
    except (TruncationError, IntegratorError, ImpossibleOutcomeError, UndefinedObservableError) as exc:
        print(f"numerical guard failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    for name in manifest.files:
        print(name)
    print("manifest.json")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
