"""Command-line harness.

Subcommands:
  run      run the task x method grid from a TOML config
  analyze  recompute operator frequencies from stored run artifacts
  eval     score one prompt file against a dataset split

Exit codes: 0 success, 2 config error, 3 dataset error, 4 budget
exhausted, 5 grid fully failed.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import AppConfig, load_config
from .datasets import TaskType, evaluator_for, load_dataset
from .errors import (
    BudgetExceededError,
    ConfigError,
    DatasetError,
    PromptSearcherError,
)
from .evaluation import Evaluator
from .gateway import (
    API_KEY_ENV,
    HttpBackend,
    ModelGateway,
    ResponseCache,
    load_mock_script,
)
from .grid import GridReport, RunSpec, analyze_paths, find_run_dirs, render_tables, run_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATASET = 3
EXIT_BUDGET = 4
EXIT_GRID_FAILED = 5

logger = logging.getLogger(__name__)


def build_gateway(config: AppConfig, mock_path: Path | None = None) -> ModelGateway:
    script_path = mock_path or config.gateway.mock_script_path
    if script_path is not None:
        backend = load_mock_script(script_path)
    else:
        import os

        if not os.environ.get(API_KEY_ENV):
            raise ConfigError(
                f"no mock script configured and {API_KEY_ENV} is not set; "
                "refusing to run without a backend"
            )
        backend = HttpBackend(base_url=config.gateway.base_url)
    return ModelGateway(
        backend,
        model_names=config.models,
        cache=ResponseCache(config.gateway.cache_dir),
        call_ceiling=config.gateway.call_ceiling,
        parallelism=config.gateway.parallelism,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config.search.rng_seed = args.seed
    if args.method:
        config.methods = list(dict.fromkeys(args.method))
    if args.out:
        config.output_dir = Path(args.out)

    dataset_paths = []
    if args.task:
        for name in args.task:
            if name not in config.datasets:
                raise DatasetError(f"task {name!r} has no dataset in the config")
            dataset_paths.append(config.datasets[name])
    else:
        dataset_paths = [config.datasets[k] for k in sorted(config.datasets)]
    if not dataset_paths:
        raise ConfigError("config declares no datasets")

    gateway = build_gateway(config, Path(args.mock) if args.mock else None)
    spec = RunSpec(
        dataset_paths=dataset_paths,
        methods=config.methods,
        search=config.search,
        output_dir=config.output_dir,
        shot_count=config.shot_count,
        example_count=config.example_count,
        evaluator_overrides=config.evaluator_overrides,
    )
    report = run_grid(spec, gateway)

    for name, text in render_tables(report, "markdown").items():
        print(f"## {name}")
        print(text)
    if report.errors:
        print(f"errors: {json.dumps(report.errors, sort_keys=True)}", file=sys.stderr)

    fully_failed = all(
        all(v is None for v in row.values()) for row in report.dev_table.values()
    )
    if fully_failed:
        return EXIT_GRID_FAILED
    if report.budget_exhausted:
        return EXIT_BUDGET
    return EXIT_OK


def _cmd_analyze(args: argparse.Namespace) -> int:
    run_dirs = find_run_dirs(args.runs)
    if not run_dirs:
        print("no run artifacts found", file=sys.stderr)
        return EXIT_DATASET
    counts, skipped = analyze_paths(run_dirs)
    report = GridReport(
        methods=[], dev_table={}, test_table={}, operator_frequency=counts
    )
    print(render_tables(report, args.format)["operator_frequency"], end="")
    if skipped:
        print(f"skipped {skipped} corrupt artifact dir(s)", file=sys.stderr)
    return EXIT_OK


def _cmd_eval(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else AppConfig()
    prompt = Path(args.prompt_file).read_text(encoding="utf-8").strip()
    if not prompt:
        raise ConfigError(f"prompt file {args.prompt_file} is empty")
    dataset = load_dataset(args.dataset)
    kind = evaluator_for(dataset.task_type, config.evaluator_overrides)
    gateway = build_gateway(config, Path(args.mock) if args.mock else None)
    evaluator = Evaluator(gateway)
    report = evaluator.evaluate(prompt, dataset.split(args.split), kind, args.split)
    print(
        json.dumps(
            {
                "task": dataset.task_type.value,
                "split": args.split,
                "examples": len(report.records),
                "evaluator": kind.value,
                "mean": report.mean,
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prompt-searcher",
        description="Prompt optimization as state-space search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the task x method grid")
    run.add_argument("--config", required=True, help="TOML config path")
    run.add_argument("--task", action="append", help="restrict to this task (repeatable)")
    run.add_argument("--method", action="append", help="restrict to this method (repeatable)")
    run.add_argument("--mock", help="mock script JSON path (overrides config)")
    run.add_argument("--seed", type=int, help="override search.rng_seed")
    run.add_argument("--out", help="override output directory")
    run.set_defaults(func=_cmd_run)

    analyze = sub.add_parser("analyze", help="operator frequency over stored runs")
    analyze.add_argument("--runs", nargs="+", required=True, help="run artifact dirs")
    analyze.add_argument("--format", choices=("markdown", "csv"), default="markdown")
    analyze.set_defaults(func=_cmd_analyze)

    ev = sub.add_parser("eval", help="evaluate one prompt on a dataset split")
    ev.add_argument("--prompt-file", required=True)
    ev.add_argument("--dataset", required=True)
    ev.add_argument("--split", choices=("dev", "test"), required=True)
    ev.add_argument("--config", help="optional TOML config for gateway settings")
    ev.add_argument("--mock", help="mock script JSON path")
    ev.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DatasetError as exc:
        print(f"dataset error: {exc}", file=sys.stderr)
        return EXIT_DATASET
    except BudgetExceededError as exc:
        print(f"budget exhausted: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except PromptSearcherError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
