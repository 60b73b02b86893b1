"""Command-line entry point: ``fragkit <experiment> [--config FILE] [overrides]``."""
from __future__ import annotations

import argparse
import logging
import sys

from .config import PARAMS, ConfigError, load_config, parse_config
from .experiments import run_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fragkit", description="Fragmentation simulation experiments")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in PARAMS:
        sp = sub.add_parser(name, help=f"run the {name} experiment")
        sp.add_argument("--config", help="JSON config file (see docs/config.md)")
        sp.add_argument("--seed", type=int, help="master seed")
        sp.add_argument("--reps", type=int, help="number of replicates")
        sp.add_argument("--workers", type=int, help="worker threads")
        sp.add_argument("--out", default=None, help="output directory for report.json and raw.csv")
        if name == "ruelle":
            sp.add_argument("--t0", type=float)
            sp.add_argument("--times", help="comma-separated t1,t2")
            sp.add_argument("--sticks", type=int)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config, args.experiment) if args.config else parse_config({}, args.experiment)
        if args.seed is not None:
            cfg.seed = args.seed
        if args.reps is not None:
            cfg.reps = args.reps
        if args.workers is not None:
            cfg.workers = args.workers
        if args.experiment == "ruelle":
            if args.t0 is not None:
                cfg.params.t0 = args.t0
            if args.times:
                cfg.params.times = [float(x) for x in args.times.split(",")]
            if args.sticks is not None:
                cfg.params.sticks = args.sticks
        cfg.params.validate()
        if cfg.reps < 1:
            raise ConfigError("reps", "must be at least 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    report = run_experiment(cfg)
    if args.out:
        path = report.write(args.out)
        logging.info("wrote %s/report.json and %s/raw.csv", path, path)
    else:
        sys.stdout.write(report.json_text())
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
