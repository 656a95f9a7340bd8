"""Exception and warning types shared across the toolkit."""


class EcorankError(Exception):
    """Base class for all toolkit errors."""


class EmptyNetwork(EcorankError):
    """Nothing is left of the network after removals."""


class LabelMismatch(EcorankError):
    """Labels of a ranking or score vector do not match the matrix."""


class ZeroDegree(EcorankError):
    """The operation requires a matrix without zero-degree nodes."""


class NonPositiveGamma(EcorankError):
    """The extremality parameter must be strictly positive."""


class DegenerateScores(EcorankError):
    """All scores are identical, so standardization is undefined."""


class DegenerateInput(EcorankError):
    """Correlation input is constant or has fewer than two entries."""


class EmptyYear(EcorankError):
    """Total trade volume for the requested year is zero."""


class EmptyIntersection(EcorankError):
    """The compared label sets share no nodes."""


class ParseError(EcorankError):
    """Malformed input line.

    Carries the 1-based line number and, when identifiable, the 1-based
    column (field) index of the offending token.
    """

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}" + (f", column {column})" if column is not None else ")")
        super().__init__(message + where)


class NegativeValue(ParseError):
    """A trade value below zero was encountered."""


class CondensationWarning(UserWarning):
    """Extremality parameter is in or near the condensed-phase regime."""
