"""Command-line entry point: ``gossip-bandits run --experiment <kind> ...``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import GossipBanditError
from .experiments import ExperimentKind, parse_config, run_experiment, spec_from_config


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gossip-bandits",
        description="Gossip successive elimination over Erdos-Renyi random graphs.",
    )
    parser.add_argument("--list-experiments", action="store_true", help="print experiment kinds and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", help="run an experiment and write CSV/JSONL results")
    run.add_argument("--experiment", help="experiment kind (see --list-experiments)")
    run.add_argument("--config", type=Path, help="key = value file of SimConfig fields plus sweep/reps")
    run.add_argument("--seed", type=int, help="master seed (replication r uses seed + r)")
    run.add_argument("--reps", type=int, help="replications per sweep point")
    run.add_argument("--out", type=Path, default=Path("results"), help="output directory")
    run.add_argument("--jobs", type=int, help="worker processes for replications")
    run.add_argument("--list-experiments", action="store_true", help="print experiment kinds and exit")
    return parser


def _list() -> None:
    for kind in ExperimentKind:
        print(kind.value)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.list_experiments:
        _list()
        return 0
    if args.command != "run":
        parser.print_help(sys.stderr)
        return 2

    try:
        config = parse_config(args.config.read_text()) if args.config else {}
        spec = spec_from_config(args.experiment, config, seed=args.seed, reps=args.reps,
                                out_dir=args.out, n_jobs=args.jobs)
        result = run_experiment(spec)
    except (GossipBanditError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    for value, summ in result.summaries:
        print(f"{spec.kind.value} sweep={value} mean_final_regret={summ.mean_final:.6g}")
    if result.fit is not None:
        print(f"slope={result.fit.slope:.4f} intercept={result.fit.intercept:.4f} "
              f"r_squared={result.fit.r_squared:.4f}")
    print(f"wrote {result.csv_path} and {result.summary_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
