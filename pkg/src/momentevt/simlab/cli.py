"""``simlab`` command line.

    simlab run --config cfg.json --out results/ [--reps N] [--seed S] [--threads T]
    simlab validate --config cfg.json
    simlab list

Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 config or IO error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from ..errors import ConfigError
from ..models import MODEL_FACTORIES
from .config import EXPERIMENTS, load_config
from .runner import emit, run_experiment

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG = 0, 1, 2

MODEL_PARAMS = {
    "pareto": "alpha > 0",
    "frechet": "alpha > 0",
    "exponential": "rate > 0",
    "bounded": "endpoint > 1, gamma < 0",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simlab", description="Monte Carlo checks for moment-based extreme quantile estimators")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write records.csv and summary.json")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--reps", type=int, help="override replications")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--threads", type=int, help="override worker count")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)

    sub.add_parser("list", help="list experiments and models")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )

    if args.command == "list":
        print("experiments:")
        for name in EXPERIMENTS:
            print(f"  {name}")
        print("models:")
        for name in MODEL_FACTORIES:
            print(f"  {name} ({MODEL_PARAMS[name]})")
        return EXIT_OK

    try:
        if args.command == "validate":
            cfg = load_config(args.config)
            print(f"ok: {cfg.experiment}, model {cfg.model.name}, grid {cfg.n_grid}")
            return EXIT_OK
        cfg = load_config(
            args.config, replications=args.reps, master_seed=args.seed, threads=args.threads
        )
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    records, report = run_experiment(cfg)
    try:
        code = emit(records, report, args.out, cfg)
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    for w in report["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    for v in report["verdicts"]:
        print(f"{'PASS' if v['passed'] else 'FAIL'} {v['name']}: {v['detail']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
