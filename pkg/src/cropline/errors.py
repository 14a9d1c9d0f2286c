"""Exception hierarchy shared by every cropline module.

``InputError`` and its subclasses mean "the caller handed us something
invalid" (bad file, malformed record, out-of-range value). The HTTP service
maps them to status 400 and the CLI to exit code 2; anything else is an
internal error (500 / exit 1).
"""


class CroplineError(Exception):
    """Base class for all errors raised by this package."""


class InputError(CroplineError):
    """Invalid user-supplied input or data file."""


class NotTracked(InputError):
    """Message does not carry the tracked hashtag."""


class MalformedLabels(InputError):
    """Name/Solution labels present but unusable (empty values or wrong order)."""


class EmptyDoc(InputError):
    """Document has no in-vocabulary tokens left after preprocessing."""


class NoVotes(InputError):
    """No reply in the thread names a disease."""


class NoMatch(InputError):
    """Fuzzy lookup found no candidate above the acceptance threshold."""

    def __init__(self, message: str, best_name: str | None = None,
                 similarity: float | None = None):
        super().__init__(message)
        self.best_name = best_name
        self.similarity = similarity
