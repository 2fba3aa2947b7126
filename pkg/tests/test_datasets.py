from __future__ import annotations

import json

import pytest
from hypothesis import given, settings, strategies as st

from conftest import DATASETS_DIR
from prompt_searcher.datasets import (
    Dataset,
    EvaluatorKind,
    Example,
    TaskType,
    evaluator_for,
    load_dataset,
    save_dataset,
    split_examples,
)
from prompt_searcher.errors import DatasetError, SplitError


def _examples(n: int) -> list[Example]:
    return [Example(f"question {i:03d}", f"answer {i:03d}") for i in range(n)]


def _write(tmp_path, payload) -> str:
    path = tmp_path / "data.json"
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def test_paper_scale_explicit_split_counts():
    dataset = load_dataset(DATASETS_DIR / "sentiment.json")
    assert (len(dataset.train), len(dataset.dev), len(dataset.test)) == (5, 5, 10)


def test_all_five_sample_datasets_load_and_have_paper_shape():
    for task in TaskType:
        dataset = load_dataset(DATASETS_DIR / f"{task.value}.json")
        assert dataset.task_type is task
        assert (len(dataset.train), len(dataset.dev), len(dataset.test)) == (5, 5, 10)


def test_flat_list_of_20_splits_5_5_10(tmp_path):
    payload = {
        "task_type": "qa",
        "examples": [
            {"input": f"question {i:03d}", "expected_output": f"answer {i:03d}"}
            for i in range(20)
        ],
    }
    dataset = load_dataset(_write(tmp_path, payload), split_seed=0)
    assert (len(dataset.train), len(dataset.dev), len(dataset.test)) == (5, 5, 10)


def test_empty_expected_output_is_a_load_error_naming_the_record(tmp_path):
    payload = {
        "task_type": "qa",
        "examples": [
            {"input": "fine", "expected_output": "fine"},
            {"input": "broken", "expected_output": ""},
        ],
    }
    with pytest.raises(DatasetError, match=r"examples\[1\]"):
        load_dataset(_write(tmp_path, payload))


def test_unknown_task_type_rejected(tmp_path):
    payload = {"task_type": "translation", "examples": []}
    with pytest.raises(DatasetError, match="translation"):
        load_dataset(_write(tmp_path, payload))


def test_duplicate_across_splits_rejected(tmp_path):
    example = {"input": "shared", "expected_output": "shared answer"}
    payload = {
        "task_type": "qa",
        "train": [example],
        "dev": [{"input": "other", "expected_output": "thing"}],
        "test": [example],
    }
    with pytest.raises(DatasetError, match="shared"):
        load_dataset(_write(tmp_path, payload))


def test_duplicate_within_one_split_allowed():
    example = Example("same", "same answer")
    dataset = Dataset(
        task_type=TaskType.QA,
        train=[example, example],
        dev=[Example("d", "d")],
        test=[Example("t", "t")],
    )
    assert len(dataset.train) == 2


def test_split_sizes_20_and_4():
    train, dev, test = split_examples(_examples(20))
    assert (len(train), len(dev), len(test)) == (5, 5, 10)
    train, dev, test = split_examples(_examples(4))
    assert (len(train), len(dev), len(test)) == (1, 1, 2)


def test_split_is_deterministic_per_seed_and_varies_across_seeds():
    examples = _examples(20)
    first = split_examples(examples, seed=0)
    again = split_examples(examples, seed=0)
    other = split_examples(examples, seed=1)
    assert first == again
    assert [len(s) for s in other] == [len(s) for s in first]
    assert first != other  # same sizes, different permutation


def test_split_too_small_errors():
    with pytest.raises(SplitError):
        split_examples(_examples(2))
    with pytest.raises(SplitError):
        split_examples([])


def test_split_ratio_validation():
    with pytest.raises(ValueError):
        split_examples(_examples(10), ratios=(0.5, 0.4, 0.2))


@settings(max_examples=60)
@given(n=st.integers(min_value=4, max_value=100), seed=st.integers(0, 2**32 - 1))
def test_split_partition_property(n, seed):
    examples = _examples(n)
    train, dev, test = split_examples(examples, seed=seed)
    combined = train + dev + test
    assert len(combined) == n
    assert set(combined) == set(examples)
    assert set(train).isdisjoint(dev)
    assert set(train).isdisjoint(test)
    assert set(dev).isdisjoint(test)
    assert len(train) == n // 4 and len(dev) == n // 4


def test_save_load_roundtrip(tmp_path):
    dataset = load_dataset(DATASETS_DIR / "nli.json")
    path = tmp_path / "roundtrip.json"
    save_dataset(dataset, path)
    restored = load_dataset(path)
    assert restored == dataset


def test_evaluator_routing_fixed_mapping():
    assert evaluator_for(TaskType.SENTIMENT) is EvaluatorKind.STRING_MATCH
    assert evaluator_for(TaskType.QA) is EvaluatorKind.STRING_MATCH
    assert evaluator_for(TaskType.SUMMARIZATION) is EvaluatorKind.CRITIC
    assert evaluator_for(TaskType.NLI) is EvaluatorKind.CRITIC
    assert evaluator_for(TaskType.REASONING) is EvaluatorKind.CRITIC


def test_evaluator_routing_is_total_and_overridable():
    for task in TaskType:
        assert isinstance(evaluator_for(task), EvaluatorKind)
    overrides = {TaskType.NLI: EvaluatorKind.STRING_MATCH}
    assert evaluator_for(TaskType.NLI, overrides) is EvaluatorKind.STRING_MATCH
    assert evaluator_for(TaskType.QA, overrides) is EvaluatorKind.STRING_MATCH


def test_nli_label_space_is_binary():
    dataset = load_dataset(DATASETS_DIR / "nli.json")
    labels = {
        ex.expected_output for ex in dataset.train + dataset.dev + dataset.test
    }
    assert labels == {"entailment", "contradiction"}
