"""Command-line interface.

    ddforge train|compare-baselines|mrb-scan|explore|replay|workload
        --config FILE [--seed N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 backend error.
"""

from __future__ import annotations

import argparse
import sys

from .backend import UnsupportedBackend
from .config import ConfigError, load_config
from .orchestrator import (
    CheckpointCorrupt,
    cmd_compare_baselines,
    cmd_explore,
    cmd_mrb_scan,
    cmd_replay,
    cmd_train,
    cmd_workload,
)
from .sim import TooManyQubits

_COMMANDS = {
    "train": cmd_train,
    "compare-baselines": cmd_compare_baselines,
    "mrb-scan": cmd_mrb_scan,
    "explore": cmd_explore,
    "replay": cmd_replay,
    "workload": cmd_workload,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddforge",
        description="Empirical DD strategy search on a noisy circuit simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="TOML experiment config")
        p.add_argument("--seed", type=int, default=None, help="master seed override")
        p.add_argument("--out", default=None, help="output directory override")
        if name == "train":
            p.add_argument(
                "--resume",
                action="store_true",
                help="resume from the latest checkpoint in the output directory",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, args.seed, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        if args.command == "train":
            report = cmd_train(config, resume=args.resume)
        else:
            report = _COMMANDS[args.command](config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CheckpointCorrupt as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (UnsupportedBackend, TooManyQubits) as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return 3
    summary = report.get("summary")
    if summary:
        print(
            f"[{args.command}] done: ga_mean={summary.get('ga_mean')} "
            f"best_baseline={summary.get('best_baseline')} "
            f"({summary.get('best_baseline_mean')})"
        )
    else:
        print(f"[{args.command}] done -> {config.out_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
