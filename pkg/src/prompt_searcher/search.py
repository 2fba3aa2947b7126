"""Optimization procedures over the prompt tree.

Four methods share the same contract: start from a seed prompt, explore
(or not), and return the explored tree plus the best node seen. "Best"
updates only on strict improvement, so ties keep the earlier prompt and
the seed is always a candidate.

The one-shot method additionally reports its child prompt as the
"reported" node even when the seed outscored it: the single-step rewrite
is the thing that method is measuring, so downstream tables show the
child's own score.
"""
from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .datasets import Example, EvaluatorKind
from .errors import BudgetExceededError
from .evaluation import EvalReport, Evaluator
from .gateway import BudgetLedger
from .graph import CORE_OPERATORS, OperatorId, SearchTree
from .moves import MoveEngine

METHODS = ("seed", "one_shot", "random_walk", "beam_search")

DEFAULT_MAX_GRAPH_SIZE = 64


@dataclass
class SearchConfig:
    method: str = "beam_search"
    steps: int = 5
    beam_width: int = 2
    depth: int = 2
    max_graph_size: int = DEFAULT_MAX_GRAPH_SIZE
    active_operators: tuple[OperatorId, ...] = CORE_OPERATORS
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown search method {self.method!r}")
        if min(self.steps, self.beam_width, self.depth) < 1:
            raise ValueError("steps, beam_width and depth must be positive")
        if OperatorId.ONE_SHOT_IMPROVE in self.active_operators:
            raise ValueError("one_shot_improve cannot be an active search operator")
        if not self.active_operators:
            raise ValueError("active_operators must be non-empty")
        if self.max_graph_size < 1 + len(self.active_operators):
            raise ValueError(
                "max_graph_size must allow at least one full expansion "
                f"(>= {1 + len(self.active_operators)})"
            )

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "steps": self.steps,
            "beam_width": self.beam_width,
            "depth": self.depth,
            "max_graph_size": self.max_graph_size,
            "active_operators": [op.value for op in self.active_operators],
            "rng_seed": self.rng_seed,
        }


@dataclass
class SearchResult:
    best: int
    reported: int
    tree: SearchTree
    dev_report_best: EvalReport
    evaluations_performed: int
    ledger_snapshot: BudgetLedger
    truncated: bool = False
    method: str = "seed"
    config: SearchConfig = field(default_factory=lambda: SearchConfig(method="seed"))

    @property
    def best_score(self) -> float:
        return self.tree.node(self.best).score

    @property
    def reported_score(self) -> float:
        return self.tree.node(self.reported).score


def walk_operator_sequence(config: SearchConfig) -> list[OperatorId]:
    """The uniform operator draws a random walk will make, in order."""
    rng = random.Random(config.rng_seed)
    active = list(config.active_operators)
    return [active[rng.randrange(len(active))] for _ in range(config.steps)]


def successful_path(result: SearchResult) -> list[OperatorId] | None:
    """Root-to-best operator sequence, if the run strictly beat its seed."""
    tree = result.tree
    if result.best == tree.root:
        return None
    best_score = tree.node(result.best).score
    root_score = tree.node(tree.root).score
    if best_score is None or root_score is None or best_score <= root_score:
        return None
    return tree.get_path(result.best)


def _finish(
    tree: SearchTree,
    best: int,
    reported: int,
    evaluator: Evaluator,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evals_before: int,
    config: SearchConfig,
    method: str,
    truncated: bool,
) -> SearchResult:
    # Memoized lookup: the best node was already scored during the run.
    best_report = evaluator.evaluate(tree.node(best).prompt_text, dev, kind, "dev")
    return SearchResult(
        best=best,
        reported=reported,
        tree=tree,
        dev_report_best=best_report,
        evaluations_performed=evaluator.evaluations_performed - evals_before,
        ledger_snapshot=evaluator.gateway.ledger_snapshot(),
        truncated=truncated,
        method=method,
        config=config,
    )


def run_seed_baseline(
    seed_prompt: str,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evaluator: Evaluator,
    config: SearchConfig | None = None,
) -> SearchResult:
    config = config or SearchConfig(method="seed")
    evals_before = evaluator.evaluations_performed
    tree = SearchTree(seed_prompt)
    report = evaluator.evaluate(seed_prompt, dev, kind, "dev")
    tree.set_score(tree.root, report.mean)
    return _finish(
        tree, tree.root, tree.root, evaluator, dev, kind, evals_before, config, "seed", False
    )


def run_one_shot(
    seed_prompt: str,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evaluator: Evaluator,
    moves: MoveEngine,
    config: SearchConfig | None = None,
) -> SearchResult:
    config = config or SearchConfig(method="one_shot")
    evals_before = evaluator.evaluations_performed
    tree = SearchTree(seed_prompt)
    root_report = evaluator.evaluate(seed_prompt, dev, kind, "dev")
    tree.set_score(tree.root, root_report.mean)

    improved = moves.one_shot_improve(seed_prompt)
    child = tree.add_child(tree.root, improved, OperatorId.ONE_SHOT_IMPROVE)
    child_report = evaluator.evaluate(improved, dev, kind, "dev")
    tree.set_score(child, child_report.mean)

    best = child if child_report.mean > root_report.mean else tree.root
    return _finish(
        tree, best, child, evaluator, dev, kind, evals_before, config, "one_shot", False
    )


def run_random_walk(
    seed_prompt: str,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evaluator: Evaluator,
    moves: MoveEngine,
    train: Sequence[Example],
    config: SearchConfig,
) -> SearchResult:
    """Walk forward one uniformly drawn move at a time, tracking the best.

    The walk always advances to the newest child, improved or not, so the
    tree is a single chain of length ``config.steps``.
    """
    evals_before = evaluator.evaluations_performed
    tree = SearchTree(seed_prompt)
    root_report = evaluator.evaluate(seed_prompt, dev, kind, "dev")
    tree.set_score(tree.root, root_report.mean)
    best = tree.root
    current = tree.root
    truncated = False

    for op in walk_operator_sequence(config):
        try:
            child_text = moves.apply_move(op, tree.node(current).prompt_text, train)
            child = tree.add_child(current, child_text, op)
            report = evaluator.evaluate(child_text, dev, kind, "dev")
            tree.set_score(child, report.mean)
        except BudgetExceededError:
            truncated = True
            break
        if report.mean > tree.node(best).score:
            best = child
        current = child

    return _finish(
        tree, best, best, evaluator, dev, kind, evals_before, config, "random_walk", truncated
    )


def run_beam_search(
    seed_prompt: str,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evaluator: Evaluator,
    moves: MoveEngine,
    train: Sequence[Example],
    config: SearchConfig,
) -> SearchResult:
    """Level-synchronous beam search over the prompt tree.

    Each level expands every beam node with every active operator, keeps
    the top ``beam_width`` children (ties to the earlier node), and stops
    early rather than let the tree outgrow ``max_graph_size``.
    """
    evals_before = evaluator.evaluations_performed
    tree = SearchTree(seed_prompt)
    root_report = evaluator.evaluate(seed_prompt, dev, kind, "dev")
    tree.set_score(tree.root, root_report.mean)
    best = tree.root
    beam = [tree.root]
    active = list(config.active_operators)
    truncated = False
    capped = False

    for _level in range(config.depth):
        candidates: list[int] = []
        try:
            for node_id in beam:
                if len(tree) + len(active) > config.max_graph_size:
                    capped = True
                    break
                parent_text = tree.node(node_id).prompt_text
                for op in active:
                    child_text = moves.apply_move(op, parent_text, train)
                    child = tree.add_child(node_id, child_text, op)
                    report = evaluator.evaluate(child_text, dev, kind, "dev")
                    tree.set_score(child, report.mean)
                    if report.mean > tree.node(best).score:
                        best = child
                    candidates.append(child)
        except BudgetExceededError:
            truncated = True
            break
        if capped or not candidates:
            break
        candidates.sort(key=lambda cid: (-tree.node(cid).score, cid))
        beam = candidates[: config.beam_width]

    return _finish(
        tree, best, best, evaluator, dev, kind, evals_before, config, "beam_search", truncated
    )


def run_method(
    method: str,
    seed_prompt: str,
    dev: Sequence[Example],
    kind: EvaluatorKind,
    evaluator: Evaluator,
    moves: MoveEngine,
    train: Sequence[Example],
    config: SearchConfig,
) -> SearchResult:
    if method == "seed":
        return run_seed_baseline(seed_prompt, dev, kind, evaluator, config)
    if method == "one_shot":
        return run_one_shot(seed_prompt, dev, kind, evaluator, moves, config)
    if method == "random_walk":
        return run_random_walk(seed_prompt, dev, kind, evaluator, moves, train, config)
    if method == "beam_search":
        return run_beam_search(seed_prompt, dev, kind, evaluator, moves, train, config)
    raise ValueError(f"unknown search method {method!r}")


def write_run_artifacts(
    directory: str | Path, result: SearchResult, eval_log: list[dict]
) -> None:
    """Persist tree.json, result.json, and eval_log.jsonl for one run."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    (directory / "tree.json").write_text(result.tree.dumps(), encoding="utf-8")
    summary = {
        "method": result.method,
        "config": result.config.to_dict(),
        "best_id": result.best,
        "best_score": result.best_score,
        "reported_id": result.reported,
        "reported_score": result.reported_score,
        "evaluations_performed": result.evaluations_performed,
        "truncated": result.truncated,
    }
    (directory / "result.json").write_text(
        json.dumps(summary, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    lines = [json.dumps(entry, ensure_ascii=False) for entry in eval_log]
    (directory / "eval_log.jsonl").write_text(
        "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
    )


def load_run_artifacts(directory: str | Path) -> tuple[SearchTree, dict]:
    directory = Path(directory)
    tree = SearchTree.loads((directory / "tree.json").read_text(encoding="utf-8"))
    summary = json.loads((directory / "result.json").read_text(encoding="utf-8"))
    return tree, summary
