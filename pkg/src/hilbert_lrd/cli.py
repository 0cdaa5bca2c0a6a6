"""Command line entry point.

    hilbert-lrd <task> --config path [--seed u64] [--threads k] [--out dir]

Exit codes: 0 success, 2 invalid configuration, 3 numerical-domain
violation.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .harness import ConfigError, ExperimentConfig, TASKS, run
from .model import DomainError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hilbert-lrd")
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="JSON or TOML experiment config")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out", default=None, help="override the output directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExperimentConfig.from_file(args.config)
        overrides = {"task": args.task}
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.out is not None:
            overrides["out"] = args.out
        config = dataclasses.replace(config, **overrides)
        report = run(config, threads=max(1, args.threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"numerical domain error: {exc}", file=sys.stderr)
        return 3
    print(json.dumps(report.to_dict(), indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
