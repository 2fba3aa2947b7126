"""Prompt optimization as classical state-space search.

Prompts are nodes, LLM-powered rewrites are edges, and dev-set accuracy
is the heuristic that guides the search.
"""

from .datasets import (
    Dataset,
    EvaluatorKind,
    Example,
    TaskType,
    evaluator_for,
    load_dataset,
    save_dataset,
    split_examples,
)
from .errors import (
    BudgetExceededError,
    ConfigError,
    CriticParseError,
    DatasetError,
    MockScriptError,
    NoScoredNodeError,
    PromptSearcherError,
    RewriteError,
    SeedLeakError,
    SplitError,
    TransportError,
    TreeError,
    UnmatchedRequestError,
)
from .evaluation import EvalRecord, EvalReport, Evaluator, normalize_answer, string_match
from .gateway import (
    BudgetLedger,
    CompletionRequest,
    CompletionResponse,
    HttpBackend,
    MockBackend,
    MockEntry,
    ModelGateway,
    ModelRole,
    ResponseCache,
    cache_key,
    load_mock_script,
    mock_script,
)
from .graph import CORE_OPERATORS, OperatorId, PromptNode, SearchTree
from .grid import GridReport, RunSpec, analyze_paths, render_tables, run_grid
from .moves import MoveEngine, OperatorSpec, leak_check, load_catalogue
from .search import (
    SearchConfig,
    SearchResult,
    run_beam_search,
    run_one_shot,
    run_random_walk,
    run_seed_baseline,
    successful_path,
    walk_operator_sequence,
)

__version__ = "0.1.0"
