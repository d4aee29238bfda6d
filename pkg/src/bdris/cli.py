"""Command-line entry points.

Subcommands:

* ``run``           full Monte-Carlo power sweep, CSV output
* ``single``        one realization with a full per-iteration trace dump
* ``validate``      run the analytic self-check suite
* ``dump-channels`` write one channel realization to a portable CSV
* ``load-channels`` read a channel dump back and report its dimensions
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from .channels import load_channels, save_channels
from .errors import ConfigError, NumericalFailureError
from .montecarlo import VARIANTS, run_sweep, solver_config_for
from .scenario import (ScenarioConfig, build_scenario, channels_for_trial,
                       dbm_to_watt, load_config)
from .selfcheck import run_all
from .solver import run as run_solver


def _add_common(p):
    p.add_argument("--config", help="INI scenario file; defaults apply if omitted")
    p.add_argument("--seed", type=int, help="override the root seed")
    p.add_argument("--out", default="results", help="output directory or file")


def _build_parser():
    parser = argparse.ArgumentParser(prog="bdris",
                                     description="multi-cell wideband surface-assisted "
                                                 "downlink simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run the configured power sweep")
    _add_common(p)
    p.add_argument("--variants", help="comma list, e.g. bd,diag,none-pi0")
    p.add_argument("--power", help="comma list of transmit powers in dBm")
    p.add_argument("--trials", type=int, help="override the trial count")
    p.add_argument("--verbose", action="store_true")

    p = sub.add_parser("single", help="one realization with a trace dump")
    _add_common(p)
    p.add_argument("--variants", help="single variant name (default bd)")
    p.add_argument("--power", help="single transmit power in dBm")
    p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("validate", help="run the self-check suite")
    p.add_argument("--config", help=argparse.SUPPRESS)

    p = sub.add_parser("dump-channels", help="write one channel realization to CSV")
    _add_common(p)
    p.add_argument("--trial", type=int, default=0)

    p = sub.add_parser("load-channels", help="read back a channel dump")
    p.add_argument("--file", required=True)
    return parser


def _load_scenario(args):
    cfg = load_config(args.config) if args.config else ScenarioConfig()
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _parse_list(text, cast):
    return tuple(cast(x.strip()) for x in text.split(",") if x.strip())


def cmd_run(args):
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    cfg = _load_scenario(args)
    variants = _parse_list(args.variants, str) if args.variants else None
    powers = _parse_list(args.power, float) if args.power else None
    run_sweep(cfg, out_dir=args.out, variants=variants, powers_dbm=powers,
              trials=args.trials)
    print(f"wrote {os.path.join(args.out, 'results.csv')} and summary.csv")
    return 0


def cmd_single(args):
    cfg = _load_scenario(args)
    variant = (args.variants or "bd").strip()
    if variant not in VARIANTS:
        print(f"unknown variant {variant!r}; known: {sorted(VARIANTS)}", file=sys.stderr)
        return 2
    p_dbm = float(args.power) if args.power else cfg.power_dbm[0]
    channels = channels_for_trial(cfg, args.trial)
    solver_cfg = solver_config_for(cfg.solver, variant)
    try:
        best, trace = run_solver(channels, float(dbm_to_watt(p_dbm)),
                                 cfg.noise_power, solver_cfg)
    except NumericalFailureError as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        return 1
    os.makedirs(args.out, exist_ok=True)
    trace_path = os.path.join(args.out, "trace.csv")
    trace.to_csv(trace_path)
    print(f"variant={variant} P={p_dbm:g} dBm trial={args.trial} "
          f"sum_rate={max(trace.sum_rates):.6f} bits/s/Hz "
          f"iters={trace.num_iterations}")
    print(f"wrote {trace_path}")
    return 0


def cmd_validate(args):
    results = run_all()
    passed = 0
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}  ({detail})")
        passed += bool(ok)
    print(f"{passed}/{len(results)} checks passed")
    return 0 if passed == len(results) else 1


def cmd_dump_channels(args):
    cfg = _load_scenario(args)
    channels = channels_for_trial(cfg, args.trial)
    out = args.out
    if os.path.isdir(out) or out.endswith(os.sep):
        os.makedirs(out, exist_ok=True)
        out = os.path.join(out, "channels.csv")
    save_channels(channels, out)
    print(f"wrote {out}")
    return 0


def cmd_load_channels(args):
    channels = load_channels(args.file)
    power = float(np.mean(np.abs(channels.direct) ** 2))
    print(f"Q={channels.num_bs} U={channels.num_users} K={channels.num_subcarriers} "
          f"N={channels.num_antennas} M={channels.num_elements} "
          f"mean direct-link power {power:.3e}")
    return 0


_COMMANDS = {
    "run": cmd_run,
    "single": cmd_single,
    "validate": cmd_validate,
    "dump-channels": cmd_dump_channels,
    "load-channels": cmd_load_channels,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
