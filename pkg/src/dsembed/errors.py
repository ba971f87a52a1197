"""Exception hierarchy shared across the toolkit.

Each error class carries the process exit code the CLI maps it to.
"""


class DsembedError(Exception):
    """Base class for all toolkit errors."""

    exit_code = 1


class ConfigError(DsembedError):
    """Invalid configuration (bad rank, tolerance, flag combination)."""

    exit_code = 2


class InputError(DsembedError):
    """Malformed or unusable input (corpus, matrix file, model file)."""

    exit_code = 3


class NumericalCollapseError(DsembedError):
    """A quantity required to stay positive underflowed or went non-finite."""

    exit_code = 4


class WordLookupError(DsembedError):
    """Base class for query-time word resolution failures."""

    exit_code = 5


class UnknownWordError(WordLookupError):
    """Query word is not in the vocabulary."""

    def __init__(self, word, suggestions=()):
        self.word = word
        self.suggestions = list(suggestions)
        msg = f"unknown word: {word!r}"
        if self.suggestions:
            msg += " (closest vocabulary entries: " + ", ".join(self.suggestions) + ")"
        super().__init__(msg)


class PrunedWordError(WordLookupError):
    """Query word exists in the vocabulary but has no embedding."""

    def __init__(self, word):
        self.word = word
        super().__init__(
            f"word {word!r} has no embedding (no co-occurrence mass; pruned before training)"
        )
