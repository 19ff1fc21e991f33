"""Command-line entry point: ``egtlab run <config> [--workers K] [--seed S] [--out PATH]``."""
from __future__ import annotations

import argparse
import sys

from .errors import EgtLabError
from .harness import load_config, run_experiment, write_experiment


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="egtlab", description="Run reproducible evolutionary game experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a YAML config")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--workers", type=int, default=1, help="worker processes (default 1)")
    run.add_argument("--seed", type=int, default=None, help="override master_seed")
    run.add_argument("--out", default=None, help="override the output CSV path")
    run.add_argument("--quiet", action="store_true", help="no progress on standard error")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None or args.out is not None:
            cfg = cfg.with_overrides(master_seed=args.seed, output=args.out)
        result = run_experiment(cfg, workers=args.workers, progress=not args.quiet)
        for path in write_experiment(result, cfg.output):
            print(path)
    except (EgtLabError, OSError) as err:
        print(f"egtlab: error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
