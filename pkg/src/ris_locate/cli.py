"""Command line entry point: ``ris-locate {sweep,peb-map,validate}``."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .config import PRESETS, ConfigError, load_config, preset
from .experiments import peb_map, run_sweep, summarize, write_records
from .fisher import write_peb_map

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    src = common.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a TOML experiment config")
    src.add_argument("--preset", choices=sorted(PRESETS), help="use a built-in configuration")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--threads", type=int, help="worker threads (default: $RIS_LOCATE_THREADS or 1)")
    common.add_argument("--out", help="output CSV path")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="ris-locate", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sw = sub.add_parser("sweep", parents=[common], help="Monte Carlo sweep to CSV")
    sw.add_argument("--trials", type=int, help="trials per sweep value (overrides the config)")
    pm = sub.add_parser("peb-map", parents=[common], help="PEB over a horizontal plane to CSV")
    pm.add_argument("--z", type=float, default=5.0, help="plane height in meters")
    pm.add_argument("--step", type=float, default=0.25, help="grid step in meters")
    sub.add_parser("validate", parents=[common], help="check a configuration and exit")
    return parser


def _load(args):
    cfg = load_config(args.config) if args.config else preset(args.preset)
    over = {}
    if args.seed is not None:
        over["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        if args.trials < 1:
            raise ConfigError("--trials: must be >= 1")
        over["trials"] = args.trials
    if args.out:
        over["output"] = args.out
    return cfg.with_overrides(**over) if over else cfg


def _cmd_sweep(cfg, args) -> None:
    records = run_sweep(cfg, threads=args.threads)
    if cfg.output:
        write_records(records, cfg.output)
    print(f"{'sweep_value':>12} {'trials':>6} {'rmse_ls_m':>11} {'rmse_ml_m':>11} {'peb_m':>11}")
    for s in summarize(records):
        print(f"{s.sweep_value:12.4g} {s.trials:6d} {s.rmse_ls:11.5f} {s.rmse_ml:11.5f} {s.peb:11.5f}")
    if cfg.output:
        print(f"wrote {len(records)} records to {cfg.output}")


def _cmd_peb_map(cfg, args) -> None:
    result = peb_map(cfg, args.z, args.step)
    if cfg.output:
        write_peb_map(result.rows(), cfg.output)
    if result.values.size == 0:
        print("no valid grid points")
        return
    qs = (0.1, 0.5, 0.9)
    print(f"{result.values.size} points at z={args.z} m; PEB percentiles: "
          + ", ".join(f"p{int(q * 100)}={result.quantile(q):.5f} m" for q in qs))
    if cfg.output:
        print(f"wrote {cfg.output}")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:  # --help
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _load(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "validate":
            print(f"ok: {len(cfg.ris)} RIS, sweep {cfg.sweep_axis} x {len(cfg.sweep_values)}, "
                  f"{cfg.trials} trials")
        elif args.command == "sweep":
            _cmd_sweep(cfg, args)
        else:
            _cmd_peb_map(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, RuntimeError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
