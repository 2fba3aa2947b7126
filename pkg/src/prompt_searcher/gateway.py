"""Single point of contact with language models.

Three concerns live here and nowhere else:

* routing: each request carries a role (task / rewriter / seeder / critic)
  that resolves to a configured model name and default temperature;
* accounting: a ledger counts live calls and tokens per role and can
  enforce a hard ceiling on live calls;
* determinism: responses are cached by a content digest of the request,
  and a scripted mock backend answers requests by substring matching so
  whole search runs can be replayed offline, byte for byte.

The wire protocol for live calls is OpenAI-compatible chat completions
(one system message, one user message) against a configurable base URL,
authenticated via the PROMPT_SEARCHER_API_KEY environment variable.
"""
from __future__ import annotations

import copy
import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Sequence

import requests

from .errors import (
    BudgetExceededError,
    MockScriptError,
    TransportError,
    UnmatchedRequestError,
)

API_KEY_ENV = "PROMPT_SEARCHER_API_KEY"
DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MAX_OUTPUT_TOKENS = 512

RETRY_ATTEMPTS = 3
RETRY_BACKOFFS = (1.0, 2.0, 4.0)


class ModelRole(Enum):
    TASK = "task"
    REWRITER = "rewriter"
    SEEDER = "seeder"
    CRITIC = "critic"


# Predictions and judging must be as deterministic as the vendor allows;
# rewriting and seeding benefit from sampling diversity.
ROLE_TEMPERATURES: dict[ModelRole, float] = {
    ModelRole.TASK: 0.0,
    ModelRole.REWRITER: 0.7,
    ModelRole.SEEDER: 0.7,
    ModelRole.CRITIC: 0.0,
}


@dataclass(frozen=True)
class CompletionRequest:
    role: ModelRole
    system_text: str
    user_text: str
    temperature: float
    max_output_tokens: int
    model_name: str

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens <= 0:
            raise ValueError("max_output_tokens must be positive")


@dataclass
class CompletionResponse:
    output_text: str
    prompt_tokens: int
    output_tokens: int
    served_from_cache: bool


def cache_key(request: CompletionRequest) -> str:
    """Deterministic digest of every field that can change model output."""
    payload = json.dumps(
        {
            "role": request.role.value,
            "model_name": request.model_name,
            "system_text": request.system_text,
            "user_text": request.user_text,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
        },
        sort_keys=True,
        separators=(",", ":"),
        ensure_ascii=False,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class BudgetLedger:
    """Per-role accounting of live (non-cached) calls and token totals."""

    calls_by_role: dict[str, int] = field(default_factory=dict)
    tokens_by_role: dict[str, int] = field(default_factory=dict)
    call_ceiling: int | None = None

    @property
    def total_calls(self) -> int:
        return sum(self.calls_by_role.values())

    def charge(self, role: ModelRole, tokens: int) -> None:
        self.calls_by_role[role.value] = self.calls_by_role.get(role.value, 0) + 1
        self.tokens_by_role[role.value] = self.tokens_by_role.get(role.value, 0) + tokens

    def check_ceiling(self) -> None:
        if self.call_ceiling is not None and self.total_calls + 1 > self.call_ceiling:
            raise BudgetExceededError(
                f"live-call ceiling of {self.call_ceiling} reached"
            )

    def snapshot(self) -> "BudgetLedger":
        return BudgetLedger(
            calls_by_role=dict(self.calls_by_role),
            tokens_by_role=dict(self.tokens_by_role),
            call_ceiling=self.call_ceiling,
        )

    def to_dict(self) -> dict:
        return {
            "calls_by_role": dict(sorted(self.calls_by_role.items())),
            "tokens_by_role": dict(sorted(self.tokens_by_role.items())),
            "call_ceiling": self.call_ceiling,
            "total_calls": self.total_calls,
        }


def _count_tokens(text: str) -> int:
    # Whitespace tokenization: crude but deterministic, which is what the
    # ledger needs from the mock backend.
    return len(text.split())


@dataclass(frozen=True)
class MockEntry:
    role: ModelRole
    matcher: str
    response: str


class MockBackend:
    """Scripted backend: answer with the first entry whose matcher text is
    contained in the request.

    Matching scans ``system_text + "\\n" + user_text`` so scripts can key on
    the prompt under evaluation (predictions carry it as the system message)
    as well as on the user payload. Entries are consulted in list order and
    the first hit wins, so more specific matchers should come first.
    """

    def __init__(
        self,
        entries: Sequence[MockEntry],
        default_response: str | None = None,
    ):
        seen: set[tuple[str, str]] = set()
        for entry in entries:
            key = (entry.role.value, entry.matcher)
            if key in seen:
                raise MockScriptError(
                    f"duplicate matcher for role {entry.role.value!r}: "
                    f"{entry.matcher[:60]!r}"
                )
            seen.add(key)
        self.entries = list(entries)
        self.default_response = default_response
        self.requests_seen: list[CompletionRequest] = []

    def generate(self, request: CompletionRequest) -> tuple[str, int, int]:
        self.requests_seen.append(request)
        haystack = request.system_text + "\n" + request.user_text
        for entry in self.entries:
            if entry.role is request.role and entry.matcher in haystack:
                output = entry.response
                break
        else:
            if self.default_response is None:
                raise UnmatchedRequestError(
                    f"no scripted entry matches {request.role.value} request: "
                    f"{request.user_text[:120]!r}"
                )
            output = self.default_response
        return output, _count_tokens(haystack), _count_tokens(output)


def mock_script(
    entries: Sequence[tuple[ModelRole, str, str]],
    default_response: str | None = None,
) -> MockBackend:
    """Build a scripted backend from (role, matcher, response) triples."""
    return MockBackend(
        [MockEntry(role, matcher, response) for role, matcher, response in entries],
        default_response=default_response,
    )


def load_mock_script(path: str | Path) -> MockBackend:
    """Load a scripted backend from a JSON file.

    Schema: {"default": null or text, "entries": [{"role", "matcher",
    "response"}, ...]}.
    """
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        entries = [
            MockEntry(ModelRole(e["role"]), e["matcher"], e["response"])
            for e in payload["entries"]
        ]
        default = payload.get("default")
    except (KeyError, TypeError, ValueError) as exc:
        raise MockScriptError(f"malformed mock script {path}: {exc}") from exc
    return MockBackend(entries, default_response=default)


class HttpBackend:
    """OpenAI-compatible chat-completions client."""

    def __init__(
        self,
        base_url: str = DEFAULT_BASE_URL,
        api_key: str | None = None,
        timeout: float = 60.0,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV, "")
        self.timeout = timeout
        self.session = session or requests.Session()

    def generate(self, request: CompletionRequest) -> tuple[str, int, int]:
        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        body = {
            "model": request.model_name,
            "messages": messages,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        try:
            resp = self.session.post(
                f"{self.base_url}/chat/completions",
                json=body,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(f"transport failure: {exc}") from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise TransportError(f"retryable HTTP {resp.status_code}: {resp.text[:200]}")
        if resp.status_code != 200:
            raise TransportError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        data = resp.json()
        output = data["choices"][0]["message"]["content"] or ""
        usage = data.get("usage", {})
        return (
            output,
            int(usage.get("prompt_tokens", 0)),
            int(usage.get("completion_tokens", 0)),
        )


class ResponseCache:
    """Content-addressed response store, optionally persisted to disk.

    One file per cache key; the body repeats the request fields so cache
    directories are auditable without the originating run.
    """

    def __init__(self, cache_dir: str | Path | None = None):
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self._memory: dict[str, dict] = {}
        self._lock = threading.Lock()

    def get(self, key: str) -> dict | None:
        with self._lock:
            if key in self._memory:
                return self._memory[key]
        if self.cache_dir:
            path = self.cache_dir / f"{key}.json"
            if path.exists():
                record = json.loads(path.read_text(encoding="utf-8"))
                with self._lock:
                    self._memory[key] = record
                return record
        return None

    def put(self, key: str, request: CompletionRequest, response: CompletionResponse) -> None:
        record = {
            "key": key,
            "role": request.role.value,
            "model_name": request.model_name,
            "system_text": request.system_text,
            "user_text": request.user_text,
            "temperature": request.temperature,
            "max_output_tokens": request.max_output_tokens,
            "output_text": response.output_text,
            "prompt_tokens": response.prompt_tokens,
            "output_tokens": response.output_tokens,
        }
        with self._lock:
            self._memory[key] = record
        if self.cache_dir:
            path = self.cache_dir / f"{key}.json"
            path.write_text(
                json.dumps(record, ensure_ascii=False, indent=2) + "\n",
                encoding="utf-8",
            )


class ModelGateway:
    """Caching, retrying, budget-accounted front of a completion backend."""

    def __init__(
        self,
        backend,
        model_names: dict[ModelRole, str] | None = None,
        cache: ResponseCache | None = None,
        call_ceiling: int | None = None,
        parallelism: int = 4,
        retry_attempts: int = RETRY_ATTEMPTS,
        retry_backoffs: Sequence[float] = RETRY_BACKOFFS,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.backend = backend
        self.model_names = dict(model_names or {})
        self.cache = cache or ResponseCache()
        self.ledger = BudgetLedger(call_ceiling=call_ceiling)
        self.retry_attempts = retry_attempts
        self.retry_backoffs = list(retry_backoffs)
        self._sleep = sleep
        self._lock = threading.Lock()
        self._slots = threading.Semaphore(max(1, parallelism))

    def model_for(self, role: ModelRole) -> str:
        return self.model_names.get(role, f"{role.value}-model")

    def build_request(
        self,
        role: ModelRole,
        system_text: str,
        user_text: str,
        temperature: float | None = None,
        max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
    ) -> CompletionRequest:
        return CompletionRequest(
            role=role,
            system_text=system_text,
            user_text=user_text,
            temperature=ROLE_TEMPERATURES[role] if temperature is None else temperature,
            max_output_tokens=max_output_tokens,
            model_name=self.model_for(role),
        )

    def chat(
        self,
        role: ModelRole,
        system_text: str,
        user_text: str,
        temperature: float | None = None,
        max_output_tokens: int = DEFAULT_MAX_OUTPUT_TOKENS,
    ) -> CompletionResponse:
        request = self.build_request(role, system_text, user_text, temperature, max_output_tokens)
        return self.complete(request)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        key = cache_key(request)
        cached = self.cache.get(key)
        if cached is not None:
            return CompletionResponse(
                output_text=cached["output_text"],
                prompt_tokens=cached["prompt_tokens"],
                output_tokens=cached["output_tokens"],
                served_from_cache=True,
            )
        with self._slots:
            with self._lock:
                self.ledger.check_ceiling()
            output, prompt_tokens, output_tokens = self._generate_with_retry(request)
            with self._lock:
                self.ledger.charge(request.role, prompt_tokens + output_tokens)
        response = CompletionResponse(
            output_text=output,
            prompt_tokens=prompt_tokens,
            output_tokens=output_tokens,
            served_from_cache=False,
        )
        self.cache.put(key, request, response)
        return response

    def _generate_with_retry(self, request: CompletionRequest) -> tuple[str, int, int]:
        last_error: TransportError | None = None
        for attempt in range(self.retry_attempts):
            try:
                return self.backend.generate(request)
            except TransportError as exc:
                last_error = exc
                if attempt + 1 < self.retry_attempts:
                    backoff = self.retry_backoffs[min(attempt, len(self.retry_backoffs) - 1)]
                    self._sleep(backoff)
        raise TransportError(
            f"request failed after {self.retry_attempts} attempts: {last_error}"
        )

    def ledger_snapshot(self) -> BudgetLedger:
        with self._lock:
            return copy.deepcopy(self.ledger)
