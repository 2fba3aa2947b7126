"""Exception types shared across the package."""


class PromptSearcherError(Exception):
    """Base class for all errors raised by this package."""


class TreeError(PromptSearcherError):
    """Structural problem in a search tree (unknown node, broken link)."""


class NoScoredNodeError(PromptSearcherError):
    """A best-node query was made against a tree with no scored nodes."""


class TransportError(PromptSearcherError):
    """A live model call failed after exhausting retries."""


class BudgetExceededError(PromptSearcherError):
    """The ledger's live-call ceiling would be exceeded by another call."""


class MockScriptError(PromptSearcherError):
    """A scripted mock backend was configured inconsistently."""


class UnmatchedRequestError(MockScriptError):
    """A request reached a strict scripted backend with no matching entry."""


class DatasetError(PromptSearcherError):
    """A dataset file failed validation."""


class SplitError(DatasetError):
    """A requested split would leave one partition empty."""


class SeedLeakError(PromptSearcherError):
    """Seed generation kept leaking training example text after retries."""

    def __init__(self, message: str, shot_index: int | None = None):
        super().__init__(message)
        self.shot_index = shot_index


class RewriteError(PromptSearcherError):
    """A rewrite call produced unusable output (for example, empty text)."""


class CriticParseError(PromptSearcherError):
    """The critic reply could not be parsed as true/false after a re-ask."""


class ConfigError(PromptSearcherError):
    """A configuration file or CLI flag combination is invalid."""
