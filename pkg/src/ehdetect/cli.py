"""Command-line interface.

Subcommands: battery-dist, roc, sweep, optimize, validate. Every run
reads one JSON configuration (or the built-in benchmark network), writes
CSV tables plus JSON metadata into the output directory, and renders the
matching figures unless --no-plots is given.

Exit codes: 0 success, 2 configuration validation error, 3 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import sys

from . import config as config_mod
from . import experiments
from .errors import ConfigError, ConvergenceError


def _common_flags(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON configuration file "
                     "(default: built-in benchmark network)")
    sub.add_argument("--seed", type=int, help="override the config seed")
    sub.add_argument("--out", default="out", help="output directory (default: out)")
    sub.add_argument("--trials", type=int, help="override Monte Carlo trial count")
    sub.add_argument("--no-plots", action="store_true",
                     help="skip figure rendering, emit CSV/JSON only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ehdetect",
        description="Energy-harvesting distributed-detection simulator and "
                    "threshold optimizer")
    subs = parser.add_subparsers(dest="command", required=True)

    sub = subs.add_parser("battery-dist", help="stationary battery CDF/pmf tables")
    _common_flags(sub)

    sub = subs.add_parser("roc", help="detection vs false-alarm budget per scheme")
    _common_flags(sub)

    sub = subs.add_parser("sweep", help="detection probability along one axis")
    _common_flags(sub)
    sub.add_argument("--axis", choices=("pav", "capacity"), required=True)

    sub = subs.add_parser("optimize", help="run one threshold search")
    _common_flags(sub)
    sub.add_argument("--scheme", choices=("1", "2", "1c", "2c"), required=True)
    sub.add_argument("--budget", type=float,
                     help="false-alarm budget for P_D objectives (default 0.5)")
    sub.add_argument("--kl", choices=("gauss", "lowsnr"), default="gauss",
                     help="KL surrogate for scheme 2 variants")

    sub = subs.add_parser("validate", help="closed-form vs oracle diagnostics")
    _common_flags(sub)
    return parser


def _load_config(args) -> config_mod.ExperimentConfig:
    cfg = (config_mod.load(args.config) if args.config
           else config_mod.default_config())
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.trials is not None:
        cfg = cfg.with_updates(trials=args.trials, validation_trials=args.trials)
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        plots = not args.no_plots
        if args.command == "battery-dist":
            experiments.run_battery_figure(cfg, args.out, plots=plots)
        elif args.command == "roc":
            experiments.run_roc(cfg, args.out, plots=plots)
        elif args.command == "sweep":
            experiments.run_sweep(cfg, args.axis, args.out, plots=plots)
        elif args.command == "optimize":
            experiments.run_optimize(cfg, args.scheme, args.out,
                                     budget=args.budget, kl=args.kl)
        elif args.command == "validate":
            experiments.run_validation(cfg, args.out)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
