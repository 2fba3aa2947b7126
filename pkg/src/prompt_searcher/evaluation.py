"""The search objective: per-example scoring averaged over a split.

Two scorers exist. String matching compares normalized prediction and
expected text and suits tasks with short discrete labels. The critic
scorer asks a stronger model to judge semantic correctness under four
fixed criteria and suits open-ended tasks. Reports are memoized per
(prompt, split content, scorer) so repeated evaluations of the same
prompt inside one run cost nothing.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .datasets import EvaluatorKind, Example
from .errors import CriticParseError
from .gateway import ModelGateway, ModelRole
from .moves import TEMPLATES_DIR

_WS_RE = re.compile(r"\s+")
_FIRST_WORD_RE = re.compile(r"[A-Za-z]+")


def load_critic_template(templates_dir: Path | None = None) -> str:
    directory = templates_dir or TEMPLATES_DIR
    return (directory / "critic.txt").read_text(encoding="utf-8").strip("\n")


def fill_critic_template(
    template: str, input_text: str, prediction: str, expected: str
) -> str:
    text = template.replace("{{INPUT}}", input_text)
    text = text.replace("{{PREDICTION}}", prediction)
    return text.replace("{{EXPECTED}}", expected)


def normalize_answer(text: str) -> str:
    """Trim, collapse whitespace runs, casefold, strip one trailing period."""
    normalized = _WS_RE.sub(" ", text.strip()).casefold()
    if normalized.endswith("."):
        normalized = normalized[:-1]
    return normalized


def string_match(prediction: str, expected: str) -> int:
    return int(normalize_answer(prediction) == normalize_answer(expected))


def split_digest(split: Sequence[Example]) -> str:
    payload = json.dumps(
        [[ex.input, ex.expected_output] for ex in split],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class EvalRecord:
    example: Example
    prediction: str
    score: int
    judge: EvaluatorKind


@dataclass
class EvalReport:
    prompt_text: str
    records: list[EvalRecord]
    mean: float
    split_name: str


class Evaluator:
    """Scores prompts on example splits through the model gateway."""

    def __init__(
        self,
        gateway: ModelGateway,
        templates_dir: Path | None = None,
        log: list[dict] | None = None,
    ):
        self.gateway = gateway
        self.critic_template = load_critic_template(templates_dir)
        self.log = log if log is not None else []
        self.evaluations_performed = 0
        self._memo: dict[tuple[str, str, str], EvalReport] = {}

    def predict(self, prompt: str, input_text: str) -> str:
        """Prompt as system message, task input as user message."""
        response = self.gateway.chat(ModelRole.TASK, prompt, input_text)
        return response.output_text.strip()

    def critic_request_text(self, input_text: str, prediction: str, expected: str) -> str:
        return fill_critic_template(self.critic_template, input_text, prediction, expected)

    @staticmethod
    def _parse_verdict(reply: str) -> bool | None:
        match = _FIRST_WORD_RE.search(reply)
        if match:
            token = match.group(0).casefold()
            if token == "true":
                return True
            if token == "false":
                return False
        return None

    def critic_judge(self, input_text: str, prediction: str, expected: str) -> bool:
        """Binary semantic judgement by the critic model.

        The first alphabetic token of the reply decides; an unparseable
        reply earns exactly one stricter re-ask before giving up.
        """
        user_text = self.critic_request_text(input_text, prediction, expected)
        reply = self.gateway.chat(ModelRole.CRITIC, "", user_text).output_text
        verdict = self._parse_verdict(reply)
        if verdict is not None:
            return verdict
        retry_text = user_text + "\n\nYour previous reply was not parseable. Answer exactly true or false."
        reply = self.gateway.chat(ModelRole.CRITIC, "", retry_text).output_text
        verdict = self._parse_verdict(reply)
        if verdict is None:
            raise CriticParseError(f"critic reply not parseable as true/false: {reply[:80]!r}")
        return verdict

    def evaluate(
        self,
        prompt: str,
        split: Sequence[Example],
        kind: EvaluatorKind,
        split_name: str = "dev",
    ) -> EvalReport:
        if not split:
            raise ValueError("cannot evaluate on an empty split")
        key = (prompt, split_digest(split), kind.value)
        memoized = self._memo.get(key)
        if memoized is not None:
            return memoized

        records: list[EvalRecord] = []
        for example in split:
            prediction = self.predict(prompt, example.input)
            if kind is EvaluatorKind.STRING_MATCH:
                score = string_match(prediction, example.expected_output)
            else:
                try:
                    score = int(
                        self.critic_judge(example.input, prediction, example.expected_output)
                    )
                except CriticParseError as exc:
                    score = 0
                    self.log.append(
                        {
                            "event": "critic_parse_error",
                            "split": split_name,
                            "input": example.input,
                            "detail": str(exc),
                        }
                    )
            record = EvalRecord(example=example, prediction=prediction, score=score, judge=kind)
            records.append(record)
            self.log.append(
                {
                    "prompt": prompt,
                    "split": split_name,
                    "input": example.input,
                    "expected": example.expected_output,
                    "prediction": prediction,
                    "score": score,
                    "judge": kind.value,
                }
            )

        report = EvalReport(
            prompt_text=prompt,
            records=records,
            mean=sum(r.score for r in records) / len(records),
            split_name=split_name,
        )
        self._memo[key] = report
        self.evaluations_performed += 1
        return report
