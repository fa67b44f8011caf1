"""Command line entry point.

Exit codes: 0 success, 1 configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from .environments import PRESETS
from .harness import SUMMARY_COLUMNS, ConfigError, ExperimentConfig, OutputSpec, run_experiment
from .metrics import selection_probability
from .traces import read_trace

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # Bad arguments count as configuration errors, not runtime errors.
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mtlbandit", description="Discounted Thompson Sampling task-selection experiments.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a JSON config")
    run.add_argument("--config", required=True, type=Path)
    run.add_argument("--trials", type=int, help="override the number of trials")
    run.add_argument("--seed", type=int, help="override base_seed")
    run.add_argument("--out", type=Path, help="directory for relative output paths")

    met = sub.add_parser("metrics", help="windowed selection probabilities of a trace")
    met.add_argument("--trace", required=True, type=Path)
    met.add_argument("--window", type=int, default=30)
    met.add_argument("--out", type=Path, help="CSV destination (default: stdout)")

    pre = sub.add_parser("presets", help="environment presets")
    pre.add_argument("action", choices=["list"])
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = ExperimentConfig.load(args.config)
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("--trials must be >= 1")
        config = replace(config, trials=args.trials)
    if args.seed is not None:
        config = replace(config, base_seed=args.seed)
    if not config.outputs:
        config = replace(
            config,
            outputs=[OutputSpec("trace", "traces"), OutputSpec("summary", "summary.csv")],
        )
    result = run_experiment(config, out_dir=args.out)
    s = result.summary
    print(",".join(SUMMARY_COLUMNS))
    print(",".join(str(v) for v in s.row()))
    for path in result.written:
        logging.info("wrote %s", path)
    return EXIT_OK


def _cmd_metrics(args: argparse.Namespace) -> int:
    try:
        trace = read_trace(args.trace)
    except OSError as exc:
        raise ConfigError(f"cannot read trace {args.trace}: {exc.strerror}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        series = selection_probability(trace, args.window)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    header = ["round", *(f"arm_{i}" for i in range(trace.n_arms))]
    rows = [[int(r), *(repr(float(v)) for v in row)] for r, row in zip(series.rounds, series.values)]
    if args.out is None:
        writer = csv.writer(sys.stdout, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return EXIT_OK
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    return EXIT_OK


def _cmd_presets(args: argparse.Namespace) -> int:
    for name, spec in PRESETS.items():
        print(f"{name}\t{spec.kind}\tarms={spec.n_arms}\thorizon={spec.horizon}")
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    handler = {"run": _cmd_run, "metrics": _cmd_metrics, "presets": _cmd_presets}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
