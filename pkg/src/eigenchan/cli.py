"""Command-line front end for the scenario harness.

Exit codes: 0 success, 2 configuration error, 3 infeasible allocation,
4 numerical rank failure, 5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import harness
from .allocation import InfeasibleAllocationError
from .harness import ConfigError
from .precoding import RankDeficiencyError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INFEASIBLE = 3
EXIT_RANK = 4
EXIT_IO = 5


def _add_common(sub):
    sub.add_argument("--config", required=True, help="path to a JSON config")
    sub.add_argument("--seed", type=int, default=None,
                     help="master seed (overrides config and EIGENCHAN_SEED)")
    sub.add_argument("--trials", type=int, default=None,
                     help="Monte Carlo trial count (overrides config)")
    sub.add_argument("--out", default=None, help="CSV output path")
    sub.add_argument("--scenario", default=None,
                     help="override the scenario named in the config")
    sub.add_argument("--workers", type=int, default=None,
                     help="worker threads for trial loops (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="eigenchan",
        description="Eigenchannel simulations for Gaussian multicarrier links")
    cmds = parser.add_subparsers(dest="command", required=True)

    _add_common(cmds.add_parser("run", help="run one scenario"))

    sw = cmds.add_parser("sweep", help="re-run a scenario over a parameter grid")
    _add_common(sw)
    sw.add_argument("--param", required=True,
                    help="dotted config path to vary, e.g. channel.nu_eve")
    sw.add_argument("--grid", required=True,
                    help="comma-separated values or a JSON list")

    val = cmds.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)

    _add_common(cmds.add_parser("export-constellation",
                                help="write constellation points as CSV"))
    return parser


def _parse_grid(text):
    try:
        parsed = json.loads(text)
        if isinstance(parsed, list):
            return parsed
        return [parsed]
    except json.JSONDecodeError:
        pass
    try:
        return [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"could not parse grid {text!r}") from None


def _resolve_seed(args, cfg):
    if args.seed is not None:
        return args.seed
    env = os.environ.get("EIGENCHAN_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"EIGENCHAN_SEED={env!r} is not an integer") from None
    return None  # fall back to the config (or its default) inside the harness


def _resolve_workers(args):
    if getattr(args, "workers", None) is not None:
        if args.workers < 1:
            raise ConfigError("--workers must be >= 1")
        return args.workers
    env = os.environ.get("EIGENCHAN_WORKERS")
    if env is not None:
        try:
            workers = int(env)
        except ValueError:
            raise ConfigError(f"EIGENCHAN_WORKERS={env!r} is not an integer") from None
        if workers < 1:
            raise ConfigError("EIGENCHAN_WORKERS must be >= 1")
        return workers
    return 1


def _emit(report, out_path):
    if out_path is not None:
        harness.write_csv(report, out_path)
    print(report.summary)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = harness.load_config(args.config)
        if args.command == "validate":
            harness.validate_config(cfg)
            print(f"config OK: scenario={cfg['scenario']} "
                  f"hash={harness.config_hash(cfg)}")
            return EXIT_OK
        if args.scenario is not None:
            cfg = dict(cfg, scenario=args.scenario)
        seed = _resolve_seed(args, cfg)
        workers = _resolve_workers(args)
        if args.command == "run":
            report = harness.run(cfg, seed=seed, trials=args.trials,
                                 workers=workers)
        elif args.command == "sweep":
            grid = _parse_grid(args.grid)
            report = harness.sweep(cfg, args.param, grid, seed=seed,
                                   trials=args.trials, workers=workers)
        elif args.command == "export-constellation":
            report = harness.export_constellation(cfg, seed=seed)
        else:  # pragma: no cover - argparse enforces the choices
            raise ConfigError(f"unknown command {args.command!r}")
        _emit(report, args.out)
        return EXIT_OK
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except InfeasibleAllocationError as err:
        print(f"infeasible allocation: {err}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (RankDeficiencyError, np.linalg.LinAlgError) as err:
        print(f"numerical rank failure: {err}", file=sys.stderr)
        return EXIT_RANK
    except OSError as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except ValueError as err:
        # invalid parameter combinations surfaced by the library
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
