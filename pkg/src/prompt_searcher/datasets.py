"""Task datasets: loading, validation, and the 25/25/50 split protocol."""
from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .errors import DatasetError, SplitError

DEFAULT_RATIOS = (0.25, 0.25, 0.50)


class TaskType(Enum):
    SENTIMENT = "sentiment"
    QA = "qa"
    SUMMARIZATION = "summarization"
    REASONING = "reasoning"
    NLI = "nli"


class EvaluatorKind(Enum):
    STRING_MATCH = "string_match"
    CRITIC = "critic"


# Tasks with short, unambiguous outputs are scored by exact matching;
# open-ended tasks go to the critic model.
DEFAULT_EVALUATORS: dict[TaskType, EvaluatorKind] = {
    TaskType.SENTIMENT: EvaluatorKind.STRING_MATCH,
    TaskType.QA: EvaluatorKind.STRING_MATCH,
    TaskType.SUMMARIZATION: EvaluatorKind.CRITIC,
    TaskType.NLI: EvaluatorKind.CRITIC,
    TaskType.REASONING: EvaluatorKind.CRITIC,
}


@dataclass(frozen=True)
class Example:
    input: str
    expected_output: str

    def __post_init__(self):
        if not self.input:
            raise DatasetError("example input must be non-empty")
        if not self.expected_output:
            raise DatasetError("example expected_output must be non-empty")


@dataclass
class Dataset:
    task_type: TaskType
    train: list[Example]
    dev: list[Example]
    test: list[Example]

    def __post_init__(self):
        for name, split in (("train", self.train), ("dev", self.dev), ("test", self.test)):
            if not split:
                raise DatasetError(f"{name} split must be non-empty")
        seen: dict[Example, str] = {}
        for name, split in (("train", self.train), ("dev", self.dev), ("test", self.test)):
            for example in split:
                if example in seen and seen[example] != name:
                    raise DatasetError(
                        f"example appears in both {seen[example]} and {name}: "
                        f"{example.input[:60]!r}"
                    )
                seen.setdefault(example, name)

    def split(self, name: str) -> list[Example]:
        try:
            return {"train": self.train, "dev": self.dev, "test": self.test}[name]
        except KeyError:
            raise DatasetError(f"unknown split name {name!r}") from None


def evaluator_for(
    task: TaskType,
    overrides: Mapping[TaskType, EvaluatorKind] | None = None,
) -> EvaluatorKind:
    if overrides and task in overrides:
        return overrides[task]
    return DEFAULT_EVALUATORS[task]


def split_examples(
    examples: Sequence[Example],
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
    seed: int = 0,
) -> tuple[list[Example], list[Example], list[Example]]:
    """Seeded Fisher-Yates shuffle, then a contiguous train/dev/test cut.

    Train and dev take floor(ratio * N) items each; test takes the rest.
    """
    if not examples:
        raise SplitError("cannot split an empty example list")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"split ratios must sum to 1, got {ratios}")

    shuffled = list(examples)
    rng = random.Random(seed)
    for i in range(len(shuffled) - 1, 0, -1):  # classic Fisher-Yates
        j = rng.randint(0, i)
        shuffled[i], shuffled[j] = shuffled[j], shuffled[i]

    n = len(shuffled)
    n_train = int(n * ratios[0])
    n_dev = int(n * ratios[1])
    train = shuffled[:n_train]
    dev = shuffled[n_train : n_train + n_dev]
    test = shuffled[n_train + n_dev :]
    if not train or not dev or not test:
        raise SplitError(
            f"split of {n} examples at ratios {ratios} leaves an empty partition"
        )
    return train, dev, test


def _parse_example(record: object, where: str) -> Example:
    if not isinstance(record, dict):
        raise DatasetError(f"{where}: example record must be an object, got {record!r}")
    unknown = set(record) - {"input", "expected_output"}
    if unknown:
        raise DatasetError(f"{where}: unexpected example fields {sorted(unknown)}")
    try:
        return Example(str(record["input"]), str(record["expected_output"]))
    except KeyError as exc:
        raise DatasetError(f"{where}: missing field {exc}") from None
    except DatasetError as exc:
        raise DatasetError(f"{where}: {exc}") from None


def load_dataset(
    path: str | Path,
    split_seed: int = 0,
    ratios: tuple[float, float, float] = DEFAULT_RATIOS,
) -> Dataset:
    """Load and validate a dataset file.

    Files either declare explicit "train"/"dev"/"test" arrays (taken
    verbatim) or a flat "examples" array that is split by the seeded
    shuffle protocol.
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"dataset {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise DatasetError(f"dataset {path} must be a JSON object")

    try:
        task_type = TaskType(payload.get("task_type"))
    except ValueError:
        raise DatasetError(
            f"dataset {path} has unknown task_type {payload.get('task_type')!r}"
        ) from None

    has_splits = any(k in payload for k in ("train", "dev", "test"))
    if has_splits:
        missing = [k for k in ("train", "dev", "test") if k not in payload]
        if missing:
            raise DatasetError(f"dataset {path} lacks split arrays: {missing}")
        splits = {}
        for name in ("train", "dev", "test"):
            records = payload[name]
            if not isinstance(records, list):
                raise DatasetError(f"dataset {path}: {name} must be an array")
            splits[name] = [
                _parse_example(rec, f"{path}:{name}[{i}]")
                for i, rec in enumerate(records)
            ]
        train, dev, test = splits["train"], splits["dev"], splits["test"]
    elif "examples" in payload:
        records = payload["examples"]
        if not isinstance(records, list):
            raise DatasetError(f"dataset {path}: examples must be an array")
        examples = [
            _parse_example(rec, f"{path}:examples[{i}]") for i, rec in enumerate(records)
        ]
        train, dev, test = split_examples(examples, ratios=ratios, seed=split_seed)
    else:
        raise DatasetError(
            f"dataset {path} must declare train/dev/test arrays or a flat examples array"
        )

    return Dataset(task_type=task_type, train=train, dev=dev, test=test)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    payload = {
        "task_type": dataset.task_type.value,
        "train": [{"input": e.input, "expected_output": e.expected_output} for e in dataset.train],
        "dev": [{"input": e.input, "expected_output": e.expected_output} for e in dataset.dev],
        "test": [{"input": e.input, "expected_output": e.expected_output} for e in dataset.test],
    }
    Path(path).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
