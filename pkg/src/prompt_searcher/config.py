"""TOML run configuration.

Sections: [models] names one model per role, [gateway] configures the
transport/cache/budget, [search] holds the search hyperparameters and
grid methods, [datasets] maps task names to dataset files, and the
optional [evaluators] section overrides the task-to-evaluator routing.
Relative paths are resolved against the config file's directory so
shipped configs work from any working directory.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import EvaluatorKind, TaskType
from .errors import ConfigError
from .gateway import DEFAULT_BASE_URL, ModelRole
from .graph import OperatorId
from .search import METHODS, SearchConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

DEFAULT_MODELS = {
    ModelRole.TASK: "gpt-4o",
    ModelRole.REWRITER: "gpt-4o",
    ModelRole.SEEDER: "gpt-4o",
    ModelRole.CRITIC: "gpt-5",
}


@dataclass
class GatewaySettings:
    base_url: str = DEFAULT_BASE_URL
    parallelism: int = 4
    call_ceiling: int | None = None
    cache_dir: Path | None = None
    mock_script_path: Path | None = None


@dataclass
class AppConfig:
    models: dict[ModelRole, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))
    gateway: GatewaySettings = field(default_factory=GatewaySettings)
    search: SearchConfig = field(default_factory=lambda: SearchConfig(method="beam_search"))
    methods: list[str] = field(default_factory=lambda: list(METHODS))
    shot_count: int = 3
    example_count: int = 2
    datasets: dict[str, Path] = field(default_factory=dict)
    evaluator_overrides: dict[TaskType, EvaluatorKind] = field(default_factory=dict)
    output_dir: Path = Path("runs")


def _expect(table: dict, key: str, types: tuple, where: str):
    value = table[key]
    if not isinstance(value, types):
        raise ConfigError(f"{where}.{key} has wrong type {type(value).__name__}")
    return value


def _resolve(base: Path, raw: str) -> Path:
    path = Path(raw)
    return path if path.is_absolute() else base / path


def load_config(path: str | Path) -> AppConfig:
    path = Path(path)
    try:
        payload = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config {path} is not valid TOML: {exc}") from exc

    base = path.parent
    config = AppConfig()

    models = payload.get("models", {})
    for role in ModelRole:
        if role.value in models:
            config.models[role] = _expect(models, role.value, (str,), "models")

    gateway = payload.get("gateway", {})
    if "base_url" in gateway:
        config.gateway.base_url = _expect(gateway, "base_url", (str,), "gateway")
    if "parallelism" in gateway:
        config.gateway.parallelism = _expect(gateway, "parallelism", (int,), "gateway")
    if "call_ceiling" in gateway:
        ceiling = _expect(gateway, "call_ceiling", (int,), "gateway")
        config.gateway.call_ceiling = ceiling if ceiling > 0 else None
    if "cache_dir" in gateway:
        config.gateway.cache_dir = _resolve(
            base, _expect(gateway, "cache_dir", (str,), "gateway")
        )
    if "mock_script_path" in gateway:
        config.gateway.mock_script_path = _resolve(
            base, _expect(gateway, "mock_script_path", (str,), "gateway")
        )

    search = payload.get("search", {})
    try:
        operators = tuple(
            OperatorId(name)
            for name in search.get(
                "active_operators",
                [op.value for op in SearchConfig().active_operators],
            )
        )
    except ValueError as exc:
        raise ConfigError(f"search.active_operators: {exc}") from exc
    try:
        config.search = SearchConfig(
            method="beam_search",
            steps=search.get("steps", 5),
            beam_width=search.get("beam_width", 2),
            depth=search.get("depth", 2),
            max_graph_size=search.get("max_graph_size", 64),
            active_operators=operators,
            rng_seed=search.get("rng_seed", 0),
        )
    except ValueError as exc:
        raise ConfigError(f"search section invalid: {exc}") from exc
    methods = search.get("methods", list(METHODS))
    if not isinstance(methods, list) or not methods:
        raise ConfigError("search.methods must be a non-empty list")
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise ConfigError(f"search.methods contains unknown methods: {unknown}")
    config.methods = methods
    config.shot_count = search.get("shot_count", 3)
    config.example_count = search.get("example_count", 2)
    if not 3 <= config.shot_count <= 5:
        raise ConfigError("search.shot_count must be between 3 and 5")
    if config.example_count not in (1, 2):
        raise ConfigError("search.example_count must be 1 or 2")
    if "output_dir" in search:
        config.output_dir = _resolve(base, _expect(search, "output_dir", (str,), "search"))

    for task_name, raw in payload.get("datasets", {}).items():
        try:
            TaskType(task_name)
        except ValueError:
            raise ConfigError(f"datasets section names unknown task {task_name!r}") from None
        config.datasets[task_name] = _resolve(base, str(raw))

    for task_name, kind_name in payload.get("evaluators", {}).items():
        try:
            config.evaluator_overrides[TaskType(task_name)] = EvaluatorKind(kind_name)
        except ValueError as exc:
            raise ConfigError(f"evaluators section: {exc}") from exc

    return config
