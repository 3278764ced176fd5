"""Command-line entry point.

One verb per experiment: ``bounds``, ``design``, ``average``, ``leakage``,
``subarray``, ``pseudo-true``.  Exit codes: 0 on success, 1 on configuration
errors, 2 when every evaluated point was numerically degenerate.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .errors import ConfigError, LocspoofError
from .harness import (ENV_SEED_PILOT, ENV_SEED_SHIFT, KINDS, ExperimentConfig, degenerate_fraction,
                      load_config, run_experiment, serialize_config)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="locspoof",
                                     description="Location-privacy bound experiments for delay-angle shift precoding.")
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb in KINDS:
        p = sub.add_parser(verb, help=f"run the {verb} experiment")
        p.add_argument("--config", help="experiment config file (defaults to the built-in scene)")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--seed-pilot", type=int, help="pilot RNG seed")
        p.add_argument("--seed-shift", type=int, help="shift-draw RNG seed")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--no-plots", action="store_true", help="skip SVG emission")
        p.add_argument("--print-config", action="store_true",
                       help="print the effective config and exit")
    return parser


def effective_config(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    config = replace(config, kind=args.verb)
    # precedence: CLI flag > environment > config file
    seed_pilot = args.seed_pilot
    if seed_pilot is None and os.environ.get(ENV_SEED_PILOT):
        seed_pilot = int(os.environ[ENV_SEED_PILOT])
    seed_shift = args.seed_shift
    if seed_shift is None and os.environ.get(ENV_SEED_SHIFT):
        seed_shift = int(os.environ[ENV_SEED_SHIFT])
    if seed_pilot is not None:
        config = replace(config, seed_pilot=seed_pilot)
    if seed_shift is not None:
        config = replace(config, seed_shift=seed_shift)
    if args.out:
        config = replace(config, out_dir=args.out)
    if args.threads:
        config = replace(config, threads=max(1, args.threads))
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = effective_config(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if args.print_config:
        print(serialize_config(config), end="")
        return 0
    try:
        rows, csv_path = run_experiment(config, emit_plots=not args.no_plots)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except LocspoofError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if config.kind == "pseudo-true":
        for row in rows:
            print(f"{row['feature']}: ({row['x_m']:.6f}, {row['y_m']:.6f}) m, "
                  f"offset {row['offset_m']:.4f} m (k_min={row['k_min']}, swapped={row['swapped']})")
    print(f"wrote {len(rows)} rows to {csv_path}")
    if degenerate_fraction(rows) >= 1.0:
        print("all points were numerically degenerate", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
