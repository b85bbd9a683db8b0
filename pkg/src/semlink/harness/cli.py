"""Command-line entry point.

Exit status: 0 on success, 2 for configuration or input errors, 3 when a
numerical routine fails (its diagnostics go to standard error).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..dataset import save_dataset
from ..errors import ConfigError, DomainError, NumericError, ParameterError, ShapeError
from . import report, runners
from .config import load_config

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _op_curve(cfg, data):
    return [runners.run_op_curve(cfg)]


def _with_data(fn):
    return lambda cfg, data: [fn(cfg, data=data())]


def _comm_cost(cfg, data):
    return [runners.run_comm_cost(cfg, data=data())]


def _mc_validate(cfg, data):
    return [runners.mc_end_to_end(cfg, data=data())]


def _allocate(cfg, data):
    return list(runners.run_allocate(cfg, data=data()))


COMMANDS = {
    "op-curve": (_op_curve, "outage probability vs transmit power by every method"),
    "alpha-sweep": (_with_data(runners.run_alpha_sweep), "utility vs fusion weight and total power"),
    "power-sweep": (_with_data(runners.run_power_sweep), "per-user score vs total power with upper bounds"),
    "alloc-surface": (_with_data(runners.run_allocation_surface), "utility over the power-split simplex"),
    "smallscale": (_with_data(runners.run_smallscale_sweep), "utility vs multipath/shadowing parameters"),
    "largescale": (_with_data(runners.run_largescale_sweep), "utility vs distance and interference power"),
    "comm-cost": (_comm_cost, "bytes sent: raw images vs triplets plus matched images"),
    "mc-validate": (_mc_validate, "closed-form expected scores vs bit-level simulation"),
    "allocate": (_allocate, "GA, equal-split and attention-only allocations"),
    "synth-dataset": (None, "write a synthetic dataset manifest with heatmap files"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="scenario file (YAML or JSON)")
    common.add_argument("--out", type=Path, help="output directory (default from config: results)")
    common.add_argument("--seed", type=int, help="RNG seed, unsigned 64-bit")
    common.add_argument("--mc-samples", type=int, help="Monte Carlo samples / replications")
    common.add_argument("--threads", type=int, help="worker threads for sweeps and GA fitness")
    common.add_argument("--no-plots", action="store_true", help="write CSV only")
    p = argparse.ArgumentParser(prog="semlink", description=__doc__.splitlines()[0], parents=[common])
    sub = p.add_subparsers(dest="command", required=True, metavar="command")
    for name, (_, help_) in COMMANDS.items():
        sub.add_parser(name, help=help_, description=help_, parents=[common])
    return p


def _run(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        raise ConfigError("--seed must fit in an unsigned 64-bit integer")
    if args.mc_samples is not None and args.mc_samples < 1:
        raise ConfigError("--mc-samples must be >= 1")
    if args.threads is not None and args.threads < 1:
        raise ConfigError("--threads must be >= 1")
    cfg = cfg.with_overrides(seed=args.seed, mc_samples=args.mc_samples, threads=args.threads, out=args.out)
    out = Path(cfg.out)
    cache = {}

    def data():
        if "d" not in cache:
            cache["d"] = cfg.load_data()
        return cache["d"]

    if args.command == "synth-dataset":
        images, users = data()
        path = save_dataset(out / "manifest.json", images, users)
        print(path)
        return EXIT_OK
    fn, _ = COMMANDS[args.command]
    for tab in fn(cfg, data):
        path = report.write_table(tab, out, command=args.command, digest=cfg.digest(), seed=cfg.seed)
        print(path)
        if not args.no_plots:
            fig = report.render_figure(tab, out)
            if fig is not None:
                print(fig)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DomainError, ParameterError, ShapeError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        for k, v in exc.diagnostics.items():
            print(f"  {k} = {v!r}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
