"""Seed prompt generation and the prompt rewrite operators.

Every rewrite is an LLM call: a fixed instruction template is filled with
the parent prompt (and, for example-injecting moves, a deterministic
sample of training pairs) and sent to the rewriter model. Templates live
as versioned text assets under ``templates/`` so runs are reproducible
and diffable.
"""
from __future__ import annotations

import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple, Sequence

from .datasets import Example, TaskType
from .errors import RewriteError, SeedLeakError
from .gateway import ModelGateway, ModelRole
from .graph import OperatorId

TEMPLATES_DIR = Path(__file__).parent / "templates"

PROMPT_SLOT = "{{CURRENT_PROMPT}}"
EXAMPLES_SLOT = "{{EXAMPLES_BLOCK}}"

# Shots or outputs at or below this length (after normalization) are
# allowed to appear in a seed prompt; short labels like "positive" are
# legitimate instruction vocabulary.
LEAK_LENGTH_FLOOR = 10

SEED_ATTEMPTS = 3
MIN_SEED_SHOTS = 3
MAX_SEED_SHOTS = 5


@dataclass(frozen=True)
class OperatorSpec:
    """One rewrite move: its template and whether it injects train examples."""

    id: OperatorId
    rewrite_instruction: str
    injects_examples: bool = False
    example_count: int = 0


def _read_template(name: str, templates_dir: Path) -> str:
    return (templates_dir / f"{name}.txt").read_text(encoding="utf-8").strip("\n")


def load_catalogue(templates_dir: Path | None = None) -> dict[OperatorId, OperatorSpec]:
    """Load the eight rewrite operators from their template assets."""
    directory = templates_dir or TEMPLATES_DIR
    catalogue: dict[OperatorId, OperatorSpec] = {}
    for op in OperatorId:
        if op is OperatorId.ONE_SHOT_IMPROVE:
            continue
        template = _read_template(op.value, directory)
        injects = EXAMPLES_SLOT in template
        catalogue[op] = OperatorSpec(
            id=op,
            rewrite_instruction=template,
            injects_examples=injects,
            example_count=2 if injects else 0,
        )
    return catalogue


def format_examples_block(examples: Sequence[Example]) -> str:
    return "\n\n".join(
        f"Input: {ex.input}\nOutput: {ex.expected_output}" for ex in examples
    )


def select_injected_examples(
    train: Sequence[Example], rng_seed: int, count: int
) -> list[Example]:
    """Run-seeded sample of training pairs, without replacement."""
    count = min(count, len(train))
    return random.Random(rng_seed).sample(list(train), count)


def fill_rewrite_template(
    spec: OperatorSpec, parent_prompt: str, examples_block: str = ""
) -> str:
    text = spec.rewrite_instruction.replace(PROMPT_SLOT, parent_prompt)
    return text.replace(EXAMPLES_SLOT, examples_block)


_FENCE_RE = re.compile(r"\A```[a-zA-Z0-9_-]*\n(.*)\n```\Z", re.DOTALL)


def clean_rewriter_output(text: str) -> str:
    """Strip wrapping fences/quotes and trailing whitespace from LLM output."""
    cleaned = text.strip()
    fence = _FENCE_RE.match(cleaned)
    if fence:
        cleaned = fence.group(1).strip()
    if len(cleaned) >= 2 and cleaned[0] == cleaned[-1] and cleaned[0] in "\"'":
        cleaned = cleaned[1:-1].strip()
    return "\n".join(line.rstrip() for line in cleaned.splitlines())


def _squash(text: str) -> str:
    return " ".join(text.split()).casefold()


class LeakCheckResult(NamedTuple):
    passed: bool
    shot_index: int | None


def leak_check(candidate: str, shots: Sequence[Example]) -> LeakCheckResult:
    """Detect verbatim training example text baked into a seed prompt.

    Fails when the candidate contains the full input or full expected
    output of any shot, compared case-insensitively after collapsing
    whitespace, for texts longer than LEAK_LENGTH_FLOOR characters.
    """
    haystack = _squash(candidate)
    for index, shot in enumerate(shots):
        for fragment in (shot.input, shot.expected_output):
            needle = _squash(fragment)
            if len(needle) > LEAK_LENGTH_FLOOR and needle in haystack:
                return LeakCheckResult(False, index)
    return LeakCheckResult(True, None)


class MoveEngine:
    """Applies rewrite operators and generates seed prompts via the gateway.

    A gateway-less engine can still build request texts (useful when
    scripting mock landscapes); calling apply_move or generate_seed on one
    raises.
    """

    def __init__(
        self,
        gateway: ModelGateway | None = None,
        templates_dir: Path | None = None,
        rng_seed: int = 0,
        example_count: int = 2,
    ):
        self.gateway = gateway
        self.templates_dir = templates_dir or TEMPLATES_DIR
        self.catalogue = load_catalogue(self.templates_dir)
        self.one_shot_template = _read_template(
            OperatorId.ONE_SHOT_IMPROVE.value, self.templates_dir
        )
        self.seed_template = _read_template("seed", self.templates_dir)
        self.rng_seed = rng_seed
        self.example_count = example_count

    def _chat(self, role: ModelRole, user_text: str):
        if self.gateway is None:
            raise RuntimeError(
                "this MoveEngine has no gateway; it can only build request texts"
            )
        return self.gateway.chat(role, "", user_text)

    def rewrite_request_text(
        self, op: OperatorId, parent_prompt: str, train: Sequence[Example] = ()
    ) -> str:
        """The exact user text a rewrite sends; exposed for scripting mocks."""
        if op is OperatorId.ONE_SHOT_IMPROVE:
            return self.one_shot_template.replace(PROMPT_SLOT, parent_prompt)
        spec = self.catalogue[op]
        block = ""
        if spec.injects_examples:
            chosen = select_injected_examples(
                train, self.rng_seed, self.example_count or spec.example_count
            )
            block = format_examples_block(chosen)
        return fill_rewrite_template(spec, parent_prompt, block)

    def apply_move(
        self, op: OperatorId, parent_prompt: str, train: Sequence[Example]
    ) -> str:
        """Rewrite ``parent_prompt`` with one catalogue operator.

        A rewrite that returns the parent text unchanged is accepted; it is
        a legal null move and will simply score identically.
        """
        if op is OperatorId.ONE_SHOT_IMPROVE:
            raise ValueError("one_shot_improve is not a catalogue move; use one_shot_improve()")
        if op not in self.catalogue:
            raise ValueError(f"no catalogue entry for operator {op}")
        user_text = self.rewrite_request_text(op, parent_prompt, train)
        response = self._chat(ModelRole.REWRITER, user_text)
        rewritten = clean_rewriter_output(response.output_text)
        if not rewritten:
            raise RewriteError(f"rewriter returned empty output for {op.value}")
        return rewritten

    def one_shot_improve(self, parent_prompt: str) -> str:
        """Single 'improve this prompt' round, no training examples."""
        user_text = self.rewrite_request_text(OperatorId.ONE_SHOT_IMPROVE, parent_prompt)
        response = self._chat(ModelRole.REWRITER, user_text)
        improved = clean_rewriter_output(response.output_text)
        if not improved:
            raise RewriteError("rewriter returned empty output for one_shot_improve")
        return improved

    def seed_request_text(
        self, shots: Sequence[Example], task_type: TaskType, attempt: int = 0
    ) -> str:
        text = self.seed_template.replace("{{TASK_TYPE}}", task_type.value)
        text = text.replace("{{SHOTS_BLOCK}}", format_examples_block(shots))
        if attempt > 0:
            text += (
                f"\n\nSTRICT REMINDER (attempt {attempt + 1}): the previous draft "
                "copied example text verbatim. Do not reuse any example input or "
                "output wording."
            )
        return text

    def generate_seed(self, shots: Sequence[Example], task_type: TaskType) -> str:
        """Reverse-engineer an instruction prompt from a few training shots."""
        if not MIN_SEED_SHOTS <= len(shots) <= MAX_SEED_SHOTS:
            raise ValueError(
                f"seed generation needs {MIN_SEED_SHOTS}-{MAX_SEED_SHOTS} shots, "
                f"got {len(shots)}"
            )
        last_index: int | None = None
        for attempt in range(SEED_ATTEMPTS):
            user_text = self.seed_request_text(shots, task_type, attempt)
            response = self._chat(ModelRole.SEEDER, user_text)
            candidate = clean_rewriter_output(response.output_text)
            if not candidate:
                raise RewriteError("seeder returned empty output")
            result = leak_check(candidate, shots)
            if result.passed:
                return candidate
            last_index = result.shot_index
        raise SeedLeakError(
            f"seed generation leaked training text after {SEED_ATTEMPTS} attempts "
            f"(offending shot index {last_index})",
            shot_index=last_index,
        )
