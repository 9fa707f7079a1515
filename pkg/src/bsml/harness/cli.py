"""Command line entry point: ``bsml <experiment> [options]``.

Exit status is 0 when every row passes, 1 when any row fails and 2 on a
configuration error.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .config import EXPERIMENTS, ConfigError, load_config, make_config
from .experiments import run_experiment
from .results import write_results

_FLAGS = {
    "seed": "seed",
    "replicates": "replicates",
    "out": "output_path",
    "format": "format",
    "precision_bits": "precision_bits",
    "jobs": "jobs",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bsml",
        description="Numerical checks of the Bolthausen-Sznitman / Mittag-Leffler scaling limit.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True, metavar="EXPERIMENT")
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--seed", type=int, help="64-bit master seed")
        p.add_argument("--replicates", type=int)
        p.add_argument("--out", help="output file (default: stdout)")
        p.add_argument("--format", choices=("csv", "json"))
        p.add_argument("--precision-bits", type=int, dest="precision_bits")
        p.add_argument("--jobs", type=int, help="worker processes for Monte Carlo blocks")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config)
            if cfg.experiment != args.experiment:
                raise ConfigError(
                    f"config is for {cfg.experiment!r} but subcommand is {args.experiment!r}"
                )
        else:
            cfg = make_config(args.experiment, seed=args.seed if args.seed is not None else 0)
        overrides = {
            field: getattr(args, flag) for flag, field in _FLAGS.items() if getattr(args, flag) is not None
        }
        cfg = dataclasses.replace(cfg, **overrides).validate()
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    result = run_experiment(cfg)
    text = write_results(result, cfg)
    if not cfg.output_path:
        sys.stdout.write(text)
    print(result.summary(), file=sys.stderr)
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
