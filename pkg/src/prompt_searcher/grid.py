"""Experiment grid: tasks x methods, result tables, and path analysis.

For each task the grid generates a seed prompt from training shots, runs
every requested method against the dev split, scores each method's
reported prompt on the held-out test split, and accumulates the operator
frequencies of successful optimization paths. All artifacts (per-run
trees, result summaries, eval logs, rendered tables) are written under
the output directory so path analysis can be re-run as pure
post-processing.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

from .datasets import Dataset, EvaluatorKind, TaskType, evaluator_for, load_dataset
from .errors import BudgetExceededError, PromptSearcherError
from .evaluation import Evaluator
from .gateway import ModelGateway
from .graph import OperatorId, SearchTree
from .moves import MoveEngine
from .search import (
    METHODS,
    SearchConfig,
    SearchResult,
    run_method,
    successful_path,
    write_run_artifacts,
)

logger = logging.getLogger(__name__)

METHOD_ORDER = METHODS  # canonical column order for all tables


@dataclass
class RunSpec:
    """Everything one grid invocation needs."""

    dataset_paths: list[Path]
    methods: list[str]
    search: SearchConfig
    output_dir: Path
    shot_count: int = 3
    example_count: int = 2
    evaluator_overrides: dict[TaskType, EvaluatorKind] = field(default_factory=dict)

    def __post_init__(self):
        if not self.methods:
            raise ValueError("methods must be non-empty")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise ValueError(f"unknown methods: {unknown}")


@dataclass
class GridReport:
    methods: list[str]
    dev_table: dict[str, dict[str, float | None]]
    test_table: dict[str, dict[str, float | None]]
    operator_frequency: dict[OperatorId, int]
    errors: dict[str, str] = field(default_factory=dict)
    budget_exhausted: bool = False

    @property
    def tasks(self) -> list[str]:
        return sorted(self.dev_table)

    def to_dict(self) -> dict:
        return {
            "methods": list(self.methods),
            "dev_table": {t: self.dev_table[t] for t in self.tasks},
            "test_table": {t: self.test_table[t] for t in self.tasks},
            "operator_frequency": {
                op.value: count for op, count in self._sorted_frequency()
            },
            "errors": dict(sorted(self.errors.items())),
        }

    def _sorted_frequency(self) -> list[tuple[OperatorId, int]]:
        return sorted(
            self.operator_frequency.items(), key=lambda kv: (-kv[1], kv[0].value)
        )


def _run_task(
    task_name: str,
    dataset: Dataset,
    spec: RunSpec,
    gateway: ModelGateway,
    report: GridReport,
) -> None:
    kind = evaluator_for(dataset.task_type, spec.evaluator_overrides)
    moves = MoveEngine(
        gateway, rng_seed=spec.search.rng_seed, example_count=spec.example_count
    )
    shots = dataset.train[: spec.shot_count]
    seed_prompt = moves.generate_seed(shots, dataset.task_type)

    for method in spec.methods:
        config = SearchConfig(
            method=method,
            steps=spec.search.steps,
            beam_width=spec.search.beam_width,
            depth=spec.search.depth,
            max_graph_size=spec.search.max_graph_size,
            active_operators=spec.search.active_operators,
            rng_seed=spec.search.rng_seed,
        )
        evaluator = Evaluator(gateway)
        try:
            result = run_method(
                method, seed_prompt, dataset.dev, kind, evaluator, moves,
                dataset.train, config,
            )
            reported_text = result.tree.node(result.reported).prompt_text
            test_report = evaluator.evaluate(reported_text, dataset.test, kind, "test")
        except BudgetExceededError as exc:
            report.errors[f"{task_name}/{method}"] = str(exc)
            report.budget_exhausted = True
            logger.warning("budget exhausted on %s/%s: %s", task_name, method, exc)
            continue
        except PromptSearcherError as exc:
            report.errors[f"{task_name}/{method}"] = str(exc)
            logger.warning("method failed on %s/%s: %s", task_name, method, exc)
            continue

        report.dev_table[task_name][method] = result.reported_score
        report.test_table[task_name][method] = test_report.mean
        path = successful_path(result)
        if path:
            for op in path:
                report.operator_frequency[op] = report.operator_frequency.get(op, 0) + 1

        run_dir = spec.output_dir / task_name / method
        write_run_artifacts(run_dir, result, evaluator.log)


def run_grid(spec: RunSpec, gateway: ModelGateway) -> GridReport:
    """Run the full task x method grid and write all artifacts."""
    report = GridReport(
        methods=list(spec.methods),
        dev_table={},
        test_table={},
        operator_frequency={op: 0 for op in spec.search.active_operators},
    )
    spec.output_dir.mkdir(parents=True, exist_ok=True)

    any_success = False
    for path in spec.dataset_paths:
        dataset = load_dataset(path)  # dataset errors abort the grid: nothing to run
        task_name = dataset.task_type.value
        report.dev_table[task_name] = {m: None for m in spec.methods}
        report.test_table[task_name] = {m: None for m in spec.methods}
        try:
            _run_task(task_name, dataset, spec, gateway, report)
        except BudgetExceededError as exc:
            report.errors[task_name] = str(exc)
            report.budget_exhausted = True
            logger.warning("budget exhausted on task %s: %s", task_name, exc)
        except PromptSearcherError as exc:
            report.errors[task_name] = str(exc)
            logger.warning("task %s failed: %s", task_name, exc)
        if any(v is not None for v in report.dev_table[task_name].values()):
            any_success = True

    _write_grid_outputs(spec.output_dir, report, gateway)
    if not any_success:
        logger.error("grid fully failed: %s", report.errors)
    return report


def _write_grid_outputs(output_dir: Path, report: GridReport, gateway: ModelGateway) -> None:
    (output_dir / "report.json").write_text(
        json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    for fmt, suffix in (("markdown", "md"), ("csv", "csv")):
        rendered = render_tables(report, fmt)
        for name, text in rendered.items():
            (output_dir / f"{name}.{suffix}").write_text(text, encoding="utf-8")
    # Ledger totals vary with cache warmth, so they live outside the
    # reproducibility-compared report files.
    (output_dir / "ledger.json").write_text(
        json.dumps(gateway.ledger_snapshot().to_dict(), indent=2) + "\n",
        encoding="utf-8",
    )


def _format_cell(value: float | None) -> str:
    return "err" if value is None else f"{value:.2f}"


def _matrix_rows(
    table: Mapping[str, Mapping[str, float | None]], methods: Sequence[str]
) -> list[list[str]]:
    columns = [m for m in METHOD_ORDER if m in methods]
    rows = [["task", *columns]]
    for task in sorted(table):
        rows.append([task, *(_format_cell(table[task].get(m)) for m in columns)])
    return rows


def _frequency_rows(report: GridReport) -> list[list[str]]:
    rows = [["operator", "count"]]
    for op, count in report._sorted_frequency():
        rows.append([op.value, str(count)])
    return rows


def _to_markdown(rows: list[list[str]]) -> str:
    lines = ["| " + " | ".join(rows[0]) + " |"]
    lines.append("|" + "|".join("---" for _ in rows[0]) + "|")
    for row in rows[1:]:
        lines.append("| " + " | ".join(row) + " |")
    return "\n".join(lines) + "\n"


def _to_csv(rows: list[list[str]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerows(rows)
    return buffer.getvalue()


def render_tables(report: GridReport, fmt: str = "markdown") -> dict[str, str]:
    """Render dev/test matrices and the operator frequency table.

    Returns a mapping of logical table name to rendered text. Columns
    follow the canonical method order; rows are alphabetical by task; the
    frequency table sorts by descending count, then operator name.
    """
    if fmt not in ("markdown", "csv"):
        raise ValueError(f"unknown table format {fmt!r}")
    render = _to_markdown if fmt == "markdown" else _to_csv
    return {
        "dev_table": render(_matrix_rows(report.dev_table, report.methods)),
        "test_table": render(_matrix_rows(report.test_table, report.methods)),
        "operator_frequency": render(_frequency_rows(report)),
    }


def find_run_dirs(paths: Sequence[str | Path]) -> list[Path]:
    """Expand the given directories to every run artifact dir beneath them."""
    found: list[Path] = []
    for raw in paths:
        base = Path(raw)
        if (base / "tree.json").exists() and (base / "result.json").exists():
            found.append(base)
            continue
        if base.is_dir():
            for tree_path in sorted(base.rglob("tree.json")):
                run_dir = tree_path.parent
                if (run_dir / "result.json").exists():
                    found.append(run_dir)
    return found


def analyze_paths(run_dirs: Sequence[str | Path]) -> tuple[dict[OperatorId, int], int]:
    """Sum operator occurrences over the successful path of each stored run.

    Pure post-processing over tree.json/result.json artifacts. Corrupt
    artifacts are skipped with a warning; the second return value counts
    them.
    """
    counts: dict[OperatorId, int] = {}
    skipped = 0
    for run_dir in run_dirs:
        run_dir = Path(run_dir)
        try:
            tree = SearchTree.loads((run_dir / "tree.json").read_text(encoding="utf-8"))
            summary = json.loads((run_dir / "result.json").read_text(encoding="utf-8"))
            best_id = int(summary["best_id"])
            best = tree.node(best_id)
            root = tree.node(tree.root)
        except (OSError, ValueError, KeyError, PromptSearcherError) as exc:
            skipped += 1
            logger.warning("skipping corrupt run artifact %s: %s", run_dir, exc)
            continue
        if best_id == tree.root or best.score is None or root.score is None:
            continue
        if best.score > root.score:
            for op in tree.get_path(best_id):
                counts[op] = counts.get(op, 0) + 1
    return counts, skipped


def load_grid_report(output_dir: str | Path) -> dict:
    return json.loads((Path(output_dir) / "report.json").read_text(encoding="utf-8"))


__all__ = [
    "GridReport",
    "RunSpec",
    "analyze_paths",
    "find_run_dirs",
    "load_grid_report",
    "render_tables",
    "run_grid",
]
