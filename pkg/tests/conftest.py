from __future__ import annotations

import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "src"))

from prompt_searcher.datasets import Example
from prompt_searcher.gateway import MockBackend, MockEntry, ModelGateway, ModelRole
from prompt_searcher.graph import CORE_OPERATORS, OperatorId
from prompt_searcher.moves import MoveEngine
from prompt_searcher.scripting import (
    dedupe_entries,
    prediction_entries,
    rewrite_entry,
    sort_entries,
)

DATASETS_DIR = REPO_ROOT / "datasets"
FIXTURES_DIR = REPO_ROOT / "fixtures"

OP_SHORT = {
    OperatorId.MAKE_VERBOSE: "mv",
    OperatorId.MAKE_CONCISE: "mc",
    OperatorId.REORDER: "ro",
    OperatorId.ADD_EXAMPLES: "ae",
    OperatorId.ONE_SHOT_IMPROVE: "os",
}
SHORT_OP = {v: k for k, v in OP_SHORT.items()}


class Landscape:
    """Declarative scripted search space over one dev split.

    Node codes are operator shortcode paths from the seed: "mc" is the
    make_concise child of the seed, "mc-ae" its add_examples child, "os"
    the one-shot child, "seed" the root. ``scores`` maps codes to correct
    counts on the dev split; unlisted codes use ``default_score``.
    """

    def __init__(
        self,
        dev,
        scores: dict[str, int],
        default_score: int = 0,
        seed_text: str = "Follow the task instructions carefully.",
        train=(),
        rng_seed: int = 0,
    ):
        self.dev = dev
        self.scores = dict(scores)
        self.default_score = default_score
        self.train = list(train)
        self.rng_seed = rng_seed
        self.texts: dict[str, str] = {"seed": seed_text}
        self._builder = MoveEngine(rng_seed=rng_seed)

    def text(self, code: str) -> str:
        if code not in self.texts:
            self.texts[code] = f"{self.texts['seed']} (variant {code})"
        return self.texts[code]

    def score_of(self, code: str) -> float:
        return self.scores.get(code, self.default_score) / len(self.dev)

    def ops_of(self, code: str) -> list[OperatorId]:
        if code == "seed":
            return []
        return [SHORT_OP[part] for part in code.split("-")]

    def _ensure_codes(self, codes) -> set[str]:
        # Include the root and every ancestor so rewrite chains are complete.
        complete: set[str] = {"seed"}
        for code in codes:
            if code == "seed":
                continue
            parts = code.split("-")
            for i in range(1, len(parts) + 1):
                complete.add("-".join(parts[:i]))
        return complete

    def entries(self, codes) -> list[MockEntry]:
        complete = self._ensure_codes(set(codes) | set(self.scores))
        entries: list[MockEntry] = []
        for code in sorted(complete):
            if code == "seed":
                entries.extend(
                    prediction_entries(self.text("seed"), self.dev, self.scores.get("seed", self.default_score))
                )
                continue
            parts = code.split("-")
            parent_code = "-".join(parts[:-1]) or "seed"
            op = SHORT_OP[parts[-1]]
            entries.append(
                rewrite_entry(
                    self._builder, op, self.text(parent_code), self.text(code), self.train
                )
            )
            entries.extend(
                prediction_entries(
                    self.text(code), self.dev, self.scores.get(code, self.default_score)
                )
            )
        return sort_entries(dedupe_entries(entries))

    def gateway(self, codes=(), call_ceiling=None) -> ModelGateway:
        return ModelGateway(
            MockBackend(self.entries(codes)), call_ceiling=call_ceiling
        )

    def runner(self, codes=(), call_ceiling=None):
        """(evaluator, moves) pair wired to this landscape's run seed."""
        from prompt_searcher.evaluation import Evaluator

        gateway = self.gateway(codes, call_ceiling=call_ceiling)
        return Evaluator(gateway), MoveEngine(gateway, rng_seed=self.rng_seed)

    def brute_force_best(self, codes) -> tuple[str, float]:
        """Independent argmax over the given codes: highest score wins,
        ties broken by the order the codes are listed (creation order)."""
        best_code, best_score = None, -1.0
        for code in codes:
            score = self.score_of(code)
            if score > best_score:
                best_code, best_score = code, score
        return best_code, best_score


def bfs_codes(depth: int, ops=("mv", "mc", "ro", "ae")) -> list[str]:
    """Every operator-path code reachable within ``depth`` levels."""
    codes, frontier = ["seed"], [""]
    for _ in range(depth):
        frontier = [
            f"{prefix}-{op}" if prefix else op for prefix in frontier for op in ops
        ]
        codes.extend(frontier)
    return codes


def make_gateway(
    entries,
    default=None,
    call_ceiling=None,
    cache=None,
    model_names=None,
) -> ModelGateway:
    """Gateway over a scripted backend; entries are MockEntry or
    (role, matcher, response) tuples."""
    normalized = [
        e if isinstance(e, MockEntry) else MockEntry(*e) for e in entries
    ]
    return ModelGateway(
        MockBackend(normalized, default_response=default),
        model_names=model_names,
        cache=cache,
        call_ceiling=call_ceiling,
    )


@pytest.fixture
def tiny_dev():
    return [Example(f"input number {i:02d}", f"answer {i:02d}") for i in range(1, 6)]


@pytest.fixture
def tiny_train():
    return [Example(f"train question {i:02d}", f"train answer {i:02d}") for i in range(1, 6)]
