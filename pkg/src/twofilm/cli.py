"""``twofilm`` command line.

Exit codes: 0 success, 2 bad config or usage, 3 negative initial data,
4 stiffness abort, 5 numeric error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .config import ConfigError, NegativeInitialData, load_config
from .experiments import (
    EXIT_CONFIG,
    EXIT_NEGATIVE,
    EXIT_NUMERIC,
    EXIT_OK,
    converge_modes,
    load_sweep_spec,
    simulate,
    sweep_eps,
)
from .persistence import CheckpointError, checkpoint_load
from .plotting import UnknownColumn, parse_plot_spec, plot_csv
from .rhs import NumericError

log = logging.getLogger("twofilm")


def _global_flags(suppress):
    p = argparse.ArgumentParser(add_help=False)
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--output-dir", default=d, help="write outputs here instead of the configured directory")
    p.add_argument("--threads", type=int, default=d if suppress else 1, help="worker threads for sweeps")
    p.add_argument("-v", "--verbose", action="count", default=d if suppress else 0)
    return p


def build_parser():
    parser = argparse.ArgumentParser(
        prog="twofilm", description="Galerkin simulations of a regularized two-layer thin film.",
        parents=[_global_flags(False)],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    g = [_global_flags(True)]

    p = sub.add_parser("simulate", parents=g, help="run one scenario")
    p.add_argument("config")
    p.add_argument("--checkpoint-at", type=float, help="also checkpoint at the first step with t >= this")
    p.add_argument("--resume", help="start from this checkpoint instead of the initial profiles")

    p = sub.add_parser("sweep-eps", parents=g, help="one run per eps value plus a summary table")
    p.add_argument("spec")

    p = sub.add_parser("converge-modes", parents=g, help="compare final states across mode counts")
    p.add_argument("spec")

    p = sub.add_parser("plot", parents=g, help="SVG chart of diagnostics columns")
    p.add_argument("csv")
    p.add_argument("plotspec", help="'energy,dissipation[;log]' or a file with a [plot] section")
    p.add_argument("-o", "--output", help="SVG path (default: next to the CSV)")

    p = sub.add_parser("checkpoint", parents=g, help="inspect or resume checkpoints")
    csub = p.add_subparsers(dest="action", required=True)
    c = csub.add_parser("show", parents=g, help="print the header and leading coefficients")
    c.add_argument("path")
    c = csub.add_parser("resume", parents=g, help="continue a run from a checkpoint")
    c.add_argument("path")
    c.add_argument("config")
    return parser


def _cmd_simulate(args, resume=None):
    cfg = load_config(args.config)
    res = simulate(cfg, args.output_dir, getattr(args, "checkpoint_at", None), resume)
    print(f"{res.status}: {res.record.accepted} steps, t={res.final_state.t:.17g}, outputs in {res.output_dir}")
    if res.message:
        print(res.message, file=sys.stderr)
    return res.exit_code


def _cmd_sweep(args, runner):
    spec = load_sweep_spec(args.spec)
    path, rows, results = runner(spec, args.output_dir, args.threads)
    for res in results:
        print(f"{res.output_dir.name}: {res.status}")
    print(f"summary: {path}")
    return EXIT_OK


def _cmd_plot(args):
    text = args.plotspec
    spec_path = Path(text)
    if spec_path.is_file():
        text = spec_path.read_text()
    if not Path(args.csv).is_file():
        raise ConfigError(f"no such CSV file: {args.csv}")
    out = plot_csv(args.csv, parse_plot_spec(text), args.output)
    print(out)
    return EXIT_OK


def _cmd_checkpoint(args):
    if args.action == "resume":
        return _cmd_simulate(args, resume=args.path)
    ck = checkpoint_load(args.path)
    s = ck.state
    p = ck.params
    print(f"n = {s.n}\nt = {s.t:.17g}\nL = {p.L:.17g}\neps = {p.eps:.17g}\nR = {p.R:.17g}\nmu = {p.mu:.17g}")
    print(f"dt_next = {ck.dt_next}\nenergy_slack = {ck.energy_slack}\nconfig_sha256 = {ck.config_sha256}")
    for k in range(min(s.n, 4) + 1):
        print(f"{k} {s.F[k]:.17g} {s.G[k]:.17g}")
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose or 0, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "simulate":
            return _cmd_simulate(args, args.resume)
        if args.command == "sweep-eps":
            return _cmd_sweep(args, sweep_eps)
        if args.command == "converge-modes":
            return _cmd_sweep(args, converge_modes)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_checkpoint(args)
    except NegativeInitialData as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NEGATIVE
    except UnknownColumn as exc:
        print(f"error: unknown column {exc.args[0]!r}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, CheckpointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
