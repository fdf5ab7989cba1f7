"""``drivestyle`` command-line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .errors import ConfigError, DataError, UpstreamMissing
from .pipeline import COMMANDS, STEPS, RunConfig, run_all

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_UPSTREAM = 3
EXIT_DATA = 4


def build_parser():
    parser = argparse.ArgumentParser(
        prog="drivestyle",
        description="Compute driving-behavior indicators and relate them to questionnaire scores.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (*STEPS, "all"):
        p = sub.add_parser(name, help=f"run the {name} step" if name != "all" else "run every step")
        p.add_argument("--config", required=True, help="JSON run configuration")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed", type=int, help="seed for randomized procedures")
        p.add_argument("--agg", choices=("mean", "median", "both"),
                       help="per-subject aggregation of per-curve statistics")
        p.add_argument("--workers", type=int, help="parallel worker processes")
        p.add_argument("--plots", action="store_true", default=None, help="also write SVG figures")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = RunConfig.load(args.config, out=args.out, seed=args.seed, agg=args.agg,
                             plots=args.plots, workers=args.workers)
        if args.command == "all":
            run_all(cfg)
        else:
            COMMANDS[args.command](cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except UpstreamMissing as exc:
        print(f"missing upstream: {exc}", file=sys.stderr)
        return EXIT_UPSTREAM
    except DataError as exc:
        print(f"data error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
