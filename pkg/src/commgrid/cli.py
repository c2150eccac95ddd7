"""Command-line front end: ``run``, ``analyze``, and ``plot-data`` verbs."""
from __future__ import annotations

import argparse
import json
import sys

from .harness import ConfigError, analyze, emit_plot_data, load_config, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="commgrid",
        description="Two-agent gridworld experiments with emergent vs pre-defined communication.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute every condition x seed run from a JSON config")
    run.add_argument("--config", required=True, help="path to the JSON configuration file")
    run.add_argument(
        "--workers", type=int, default=1, help="parallel run processes (results are scheduling-independent)"
    )

    an = sub.add_parser("analyze", help="recompute the summary from a finished output directory")
    an.add_argument("run_dir", help="experiment output directory")

    plot = sub.add_parser("plot-data", help="emit plot-ready CSV series from a finished output directory")
    plot.add_argument("run_dir", help="experiment output directory")
    return parser


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.workers < 1:
        raise ConfigError(f"--workers must be >= 1, got {args.workers}")
    summary = run_experiment(
        config, workers=args.workers, progress=lambda name: print(f"finished {name}", file=sys.stderr)
    )
    for cond, block in summary["conditions"].items():
        print(f"{cond}: mean final steps {block['mean_final_steps']:.2f}")
    comparison = summary["comparison"]
    if comparison is not None:
        eta = comparison["attenuation_pct"]
        p = comparison["welch_p"]
        print(f"attenuation {eta:.1f}%" + (f", Welch p = {p:.4g}" if p is not None else ""))
    print(f"summary written to {config.output_dir}/summary.json")
    return 0


def _cmd_analyze(args: argparse.Namespace) -> int:
    summary = analyze(args.run_dir)
    from .harness import SUMMARY_JSON, _json_dumps
    from pathlib import Path

    (Path(args.run_dir) / SUMMARY_JSON).write_text(_json_dumps(summary))
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def _cmd_plot_data(args: argparse.Namespace) -> int:
    for path in emit_plot_data(args.run_dir):
        print(path)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {"run": _cmd_run, "analyze": _cmd_analyze, "plot-data": _cmd_plot_data}
    try:
        return handlers[args.command](args)
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
