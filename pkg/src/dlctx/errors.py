"""Exception hierarchy shared across the package."""


class DlctxError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(DlctxError):
    """Source program could not be parsed or violates a static rule.

    Carries the 1-based position of the offending token when known.
    """

    def __init__(self, message: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            message = f"{message} (line {line}, col {col})"
        super().__init__(message)


class AnalysisError(DlctxError):
    """A static analysis was asked about something outside its domain."""


class ContextError(DlctxError):
    """An initial context could not be built for the given program."""


class ExploreError(DlctxError):
    """The concrete interpreter hit a state the language does not define."""
