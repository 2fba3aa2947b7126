from __future__ import annotations

import json

import pytest

from conftest import make_gateway
from prompt_searcher.errors import (
    BudgetExceededError,
    MockScriptError,
    TransportError,
    UnmatchedRequestError,
)
from prompt_searcher.gateway import (
    CompletionRequest,
    MockBackend,
    MockEntry,
    ModelGateway,
    ModelRole,
    ResponseCache,
    cache_key,
    load_mock_script,
    mock_script,
)

REQ = dict(system_text="P1", user_text="P1||x1", temperature=0.0, max_output_tokens=64)


def _request(role=ModelRole.TASK, model="m-task", **overrides) -> CompletionRequest:
    fields = {**REQ, **overrides}
    return CompletionRequest(role=role, model_name=model, **fields)


def test_scripted_lookup_returns_response_uncached():
    gateway = make_gateway([(ModelRole.TASK, "P1||x1", "positive")])
    response = gateway.complete(_request())
    assert response.output_text == "positive"
    assert response.served_from_cache is False


def test_cache_hit_preserves_ledger_and_token_counts():
    gateway = make_gateway([(ModelRole.TASK, "P1||x1", "positive")])
    first = gateway.complete(_request())
    live_calls = gateway.ledger.total_calls
    second = gateway.complete(_request())
    assert second.served_from_cache is True
    assert second.output_text == "positive"
    assert (second.prompt_tokens, second.output_tokens) == (
        first.prompt_tokens,
        first.output_tokens,
    )
    assert gateway.ledger.total_calls == live_calls == 1


def test_sixth_distinct_live_request_hits_ceiling():
    entries = [(ModelRole.TASK, f"q{i}", f"a{i}") for i in range(10)]
    gateway = make_gateway(entries, call_ceiling=5)
    for i in range(5):
        gateway.complete(_request(user_text=f"q{i}"))
    with pytest.raises(BudgetExceededError):
        gateway.complete(_request(user_text="q5"))
    # Cached repeats are still fine after the ceiling is reached.
    assert gateway.complete(_request(user_text="q0")).served_from_cache is True
    assert gateway.ledger.total_calls == 5


def test_ledger_counts_by_role():
    gateway = make_gateway(
        [
            (ModelRole.TASK, "ask", "reply"),
            (ModelRole.REWRITER, "rewrite", "rewritten"),
        ]
    )
    gateway.complete(_request(user_text="ask"))
    gateway.complete(_request(role=ModelRole.REWRITER, user_text="rewrite please"))
    gateway.complete(_request(role=ModelRole.REWRITER, user_text="rewrite again"))
    assert gateway.ledger.calls_by_role == {"task": 1, "rewriter": 2}
    assert gateway.ledger.tokens_by_role["task"] > 0


def test_cache_key_deterministic_and_field_sensitive():
    base = _request()
    assert cache_key(base) == cache_key(_request())
    assert cache_key(base) != cache_key(_request(temperature=0.7))
    assert cache_key(base) != cache_key(_request(user_text="P1||x2"))
    assert cache_key(base) != cache_key(_request(system_text="P2"))
    assert cache_key(base) != cache_key(_request(max_output_tokens=65))
    assert cache_key(base) != cache_key(_request(model="m-other"))
    assert cache_key(base) != cache_key(_request(role=ModelRole.REWRITER))


def test_cache_key_matches_frozen_golden_digest():
    # Digest computed once with a standalone sha256-over-canonical-JSON
    # script and frozen here; guards the on-disk cache format.
    request = CompletionRequest(
        role=ModelRole.TASK,
        system_text="You are a poet.",
        user_text="Write a haiku about rivers.",
        temperature=0.0,
        max_output_tokens=512,
        model_name="gpt-4o",
    )
    assert cache_key(request) == (
        "c188cb89f51a13d8322abd4d67f68cd3cc4a09fbdbd4a60bf4f0c7264a1e9f6a"
    )


def test_mock_script_builder_and_first_match_wins():
    backend = mock_script(
        [
            (ModelRole.TASK, "alpha beta", "specific"),
            (ModelRole.TASK, "alpha", "general"),
        ]
    )
    gateway = ModelGateway(backend)
    assert gateway.chat(ModelRole.TASK, "", "alpha beta gamma").output_text == "specific"
    assert gateway.chat(ModelRole.TASK, "", "alpha only").output_text == "general"


def test_mock_matching_sees_system_text():
    # Predictions carry the prompt as the system message; scripts must be
    # able to key on it.
    gateway = make_gateway([(ModelRole.TASK, "PROMPT-A\nsome input", "keyed")])
    response = gateway.chat(ModelRole.TASK, "PROMPT-A", "some input")
    assert response.output_text == "keyed"


def test_duplicate_matcher_rejected_per_role():
    with pytest.raises(MockScriptError):
        mock_script(
            [
                (ModelRole.TASK, "same", "a"),
                (ModelRole.TASK, "same", "b"),
            ]
        )
    # The same matcher under different roles is fine.
    mock_script(
        [
            (ModelRole.TASK, "same", "a"),
            (ModelRole.CRITIC, "same", "b"),
        ]
    )


def test_unmatched_request_raises_in_strict_mode_and_falls_back_otherwise():
    strict = make_gateway([(ModelRole.TASK, "known", "yes")])
    with pytest.raises(UnmatchedRequestError):
        strict.chat(ModelRole.TASK, "", "mystery request")
    lenient = make_gateway([(ModelRole.TASK, "known", "yes")], default="fallback")
    assert lenient.chat(ModelRole.TASK, "", "mystery request").output_text == "fallback"


def test_role_filtering_prevents_cross_role_matches():
    gateway = make_gateway([(ModelRole.CRITIC, "shared text", "true")])
    with pytest.raises(UnmatchedRequestError):
        gateway.chat(ModelRole.TASK, "", "shared text")


def test_mock_script_file_roundtrip(tmp_path):
    path = tmp_path / "script.json"
    path.write_text(
        json.dumps(
            {
                "default": None,
                "entries": [
                    {"role": "seeder", "matcher": "Task type: qa", "response": "Answer briefly."}
                ],
            }
        ),
        encoding="utf-8",
    )
    backend = load_mock_script(path)
    gateway = ModelGateway(backend)
    assert gateway.chat(ModelRole.SEEDER, "", "Task type: qa\n...").output_text == "Answer briefly."
    path.write_text('{"entries": [{"role": "nope"}]}', encoding="utf-8")
    with pytest.raises(MockScriptError):
        load_mock_script(path)


class FlakyBackend:
    """Fails with transport errors a fixed number of times, then succeeds."""

    def __init__(self, failures: int):
        self.failures = failures
        self.calls = 0

    def generate(self, request):
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("simulated 503")
        return "recovered", 3, 1


def test_retry_recovers_after_transient_failures():
    sleeps: list[float] = []
    gateway = ModelGateway(FlakyBackend(failures=2), sleep=sleeps.append)
    response = gateway.complete(_request())
    assert response.output_text == "recovered"
    assert sleeps == [1.0, 2.0]
    assert gateway.ledger.total_calls == 1  # only the successful attempt is charged


def test_retry_gives_up_after_attempt_budget():
    sleeps: list[float] = []
    backend = FlakyBackend(failures=10)
    gateway = ModelGateway(backend, sleep=sleeps.append)
    with pytest.raises(TransportError):
        gateway.complete(_request())
    assert backend.calls == 3
    assert sleeps == [1.0, 2.0]
    assert gateway.ledger.total_calls == 0


def test_disk_cache_persists_across_gateway_instances(tmp_path):
    cache_dir = tmp_path / "cache"
    first = make_gateway(
        [(ModelRole.TASK, "P1||x1", "positive")], cache=ResponseCache(cache_dir)
    )
    first.complete(_request())
    assert len(list(cache_dir.glob("*.json"))) == 1

    # A second gateway (fresh backend with no entries) must serve from disk.
    second = ModelGateway(
        MockBackend([], default_response=None), cache=ResponseCache(cache_dir)
    )
    response = second.complete(_request())
    assert response.served_from_cache is True
    assert response.output_text == "positive"
    assert second.ledger.total_calls == 0


def test_cache_file_body_repeats_request_fields(tmp_path):
    cache_dir = tmp_path / "cache"
    gateway = make_gateway(
        [(ModelRole.TASK, "P1||x1", "positive")], cache=ResponseCache(cache_dir)
    )
    gateway.complete(_request())
    record = json.loads(next(cache_dir.glob("*.json")).read_text(encoding="utf-8"))
    assert record["output_text"] == "positive"
    assert record["user_text"] == "P1||x1"
    assert record["role"] == "task"
    assert record["key"] == cache_key(_request())


def test_build_request_uses_configured_models_and_role_temperatures():
    gateway = make_gateway([], model_names={ModelRole.TASK: "alpha", ModelRole.CRITIC: "beta"})
    task_request = gateway.build_request(ModelRole.TASK, "s", "u")
    critic_request = gateway.build_request(ModelRole.CRITIC, "s", "u")
    rewrite_request = gateway.build_request(ModelRole.REWRITER, "s", "u")
    assert task_request.model_name == "alpha"
    assert critic_request.model_name == "beta"
    assert task_request.temperature == 0.0
    assert critic_request.temperature == 0.0
    assert rewrite_request.temperature == 0.7


def test_request_validation():
    with pytest.raises(ValueError):
        _request(temperature=-1.0)
    with pytest.raises(ValueError):
        _request(max_output_tokens=0)
