"""Helpers for building scripted mock-backend landscapes.

A landscape assigns every prompt the number of examples it answers
correctly on a split. These helpers turn that declarative description
into mock script entries: rewrite entries whose matcher is the exact
rewrite request text, prediction entries keyed on (prompt, input), and
critic entries keyed on (prediction, expected). Entries are sorted
longest-matcher-first so the most specific entry always wins.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from .datasets import Example
from .evaluation import fill_critic_template, load_critic_template
from .gateway import MockEntry, ModelRole
from .moves import MoveEngine

WRONG_ANSWER_PREFIX = "That question is out of scope for this note"


def seed_entry(moves: MoveEngine, shots, task_type, seed_text: str) -> MockEntry:
    return MockEntry(ModelRole.SEEDER, moves.seed_request_text(shots, task_type), seed_text)


def rewrite_entry(
    moves: MoveEngine, op, parent_prompt: str, child_text: str, train: Sequence[Example] = ()
) -> MockEntry:
    matcher = moves.rewrite_request_text(op, parent_prompt, train)
    return MockEntry(ModelRole.REWRITER, matcher, child_text)


def wrong_answer() -> str:
    # Deterministic, clearly incorrect, and never normalize-equal to any
    # expected output in the shipped datasets.
    return WRONG_ANSWER_PREFIX + "."


def prediction_entries(
    prompt: str,
    split: Sequence[Example],
    correct_count: int,
) -> list[MockEntry]:
    """Task-model entries making ``prompt`` answer the first
    ``correct_count`` examples correctly and miss the rest."""
    entries = []
    for i, example in enumerate(split):
        response = example.expected_output if i < correct_count else wrong_answer()
        entries.append(MockEntry(ModelRole.TASK, f"{prompt}\n{example.input}", response))
    return entries


def critic_entries(split: Sequence[Example]) -> list[MockEntry]:
    """Critic entries judging exact-expected predictions true and the
    standard wrong answer false, for every example of a split."""
    template = load_critic_template()
    entries = []
    for example in split:
        good = fill_critic_template(
            template, example.input, example.expected_output, example.expected_output
        )
        bad = fill_critic_template(
            template, example.input, wrong_answer(), example.expected_output
        )
        entries.append(MockEntry(ModelRole.CRITIC, good, "true"))
        entries.append(MockEntry(ModelRole.CRITIC, bad, "false"))
    return entries


def dedupe_entries(entries: Iterable[MockEntry]) -> list[MockEntry]:
    """Drop repeated (role, matcher) pairs; identical responses only."""
    seen: dict[tuple[str, str], str] = {}
    result: list[MockEntry] = []
    for entry in entries:
        key = (entry.role.value, entry.matcher)
        if key in seen:
            if seen[key] != entry.response:
                raise ValueError(
                    f"conflicting responses for one matcher: {entry.matcher[:60]!r}"
                )
            continue
        seen[key] = entry.response
        result.append(entry)
    return result


def sort_entries(entries: Iterable[MockEntry]) -> list[MockEntry]:
    """Longest matcher first, so specific entries shadow general ones."""
    return sorted(entries, key=lambda e: (-len(e.matcher), e.role.value, e.matcher))


def write_script(entries: Sequence[MockEntry], path: str | Path, default: str | None = None) -> None:
    payload = {
        "default": default,
        "entries": [
            {"role": e.role.value, "matcher": e.matcher, "response": e.response}
            for e in entries
        ],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
