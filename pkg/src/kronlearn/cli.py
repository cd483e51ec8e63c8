"""Command-line entry point: ``kronlearn <experiment> --config path.json``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import ConfigError, KronlearnError
from .harness import EXPERIMENTS, ExperimentConfig, run, write_csv

EXIT_OK, EXIT_CONFIG, EXIT_CHECK, EXIT_RUNTIME = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="kronlearn", description=__doc__)
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="JSON file with ExperimentConfig fields")
    scale = ap.add_mutually_exclusive_group()
    scale.add_argument("--desk", action="store_true", help="small figure-1 grid (p in {16, 64}, 25 trials)")
    scale.add_argument("--full", action="store_true", help="figure-1 grid (p in {128, 256, 512}, 50 trials)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out", help="CSV path (default: config output_path, else stdout)")
    return ap


def load_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
    if data.get("experiment", args.experiment) != args.experiment:
        raise ConfigError(f"config is for {data['experiment']!r}, not {args.experiment!r}")
    data = {**data, "experiment": args.experiment}
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out is not None:
        data["output_path"] = args.out
    preset = "desk" if args.desk else "full" if args.full else None
    return ExperimentConfig.from_dict(data, preset=preset)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
    except (ConfigError, TypeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        table = run(cfg)
        if cfg.output_path:
            write_csv(table, cfg.output_path)
        else:
            sys.stdout.write(table.to_csv())
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (KronlearnError, ValueError, RuntimeError, OSError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if table.failures:
        print(f"check failures: {', '.join(table.failures)}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
