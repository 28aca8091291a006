"""Command line entry points: gen-toy, run, sweep-blocks, summarize.

Exit codes: 0 on success, 1 for invalid configuration or arguments, 2 for
I/O failures. A solver ending in backtrack failure is reported in the
summary but is not a process failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .datasets import ToySpec, generate_toy, save_libsvm
from .experiments import (ConfigError, block_size_sweep, load_config,
                          run_experiment, summarize_directory)


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; bad arguments are configuration
    # errors here, which map to exit code 1
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blockcd",
                     description="Block-coordinate proximal solvers and the "
                                 "budgeted comparison protocol.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a solver comparison experiment")
    p_run.add_argument("--config", required=True, help="INI manifest path")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, help="base seed (overrides config)")
    p_run.add_argument("--replicates", type=int,
                       help="replicate count (overrides config)")

    p_toy = sub.add_parser("gen-toy", help="generate a synthetic dataset pair")
    p_toy.add_argument("--n", type=int, default=200, help="training samples")
    p_toy.add_argument("--d", type=int, default=2000, help="features")
    p_toy.add_argument("--t", type=int, default=20, help="relevant features")
    p_toy.add_argument("--nt", type=int, default=1000, help="test samples")
    p_toy.add_argument("--seed", type=int, default=0)
    p_toy.add_argument("--out", required=True, help="output directory")

    p_sweep = sub.add_parser("sweep-blocks",
                             help="importance-sampled runs at several block "
                                  "sizes")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--sizes", default="10,20,50,100",
                         help="comma-separated block sizes")
    p_sweep.add_argument("--out", help="output directory (overrides config)")
    p_sweep.add_argument("--seed", type=int)
    p_sweep.add_argument("--replicates", type=int)

    p_sum = sub.add_parser("summarize",
                           help="re-aggregate metrics of a finished run")
    p_sum.add_argument("--dir", required=True, help="experiment directory")
    return parser


def _load_with_overrides(args):
    config = load_config(args.config)
    if getattr(args, "out", None):
        config.out_dir = args.out
    if getattr(args, "seed", None) is not None:
        config.seed = args.seed
    if getattr(args, "replicates", None) is not None:
        if args.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        config.replicates = args.replicates
    return config


def _cmd_run(args) -> int:
    run_experiment(_load_with_overrides(args))
    return 0


def _cmd_gen_toy(args) -> int:
    spec = ToySpec(n_train=args.n, n_test=args.nt, dim=args.d,
                   n_relevant=args.t, seed=args.seed)
    train, test = generate_toy(spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_libsvm(train, out / "toy_train.libsvm")
    save_libsvm(test, out / "toy_test.libsvm")
    print(f"wrote {out / 'toy_train.libsvm'} ({train.n_samples} x {train.dim})")
    print(f"wrote {out / 'toy_test.libsvm'} ({test.n_samples} x {test.dim})")
    return 0


def _cmd_sweep(args) -> int:
    config = _load_with_overrides(args)
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad --sizes value {args.sizes!r}") from exc
    if not sizes:
        raise ConfigError("--sizes must name at least one block size")
    block_size_sweep(config, sizes)
    return 0


def _cmd_summarize(args) -> int:
    summarize_directory(args.dir)
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "gen-toy": _cmd_gen_toy,
    "sweep-blocks": _cmd_sweep,
    "summarize": _cmd_summarize,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
