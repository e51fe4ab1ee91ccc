"""Exception types raised across the package."""


class CrnError(Exception):
    """Base class for all package errors."""


class ParseError(CrnError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = "" if line is None else f" (line {line}, column {column})"
        super().__init__(message + where)


class ValidationError(CrnError):
    pass


class EvaluationError(CrnError):
    pass


class InfiniteSpace(CrnError):
    pass


class CapExceeded(CrnError):
    pass


class DimensionMismatch(CrnError):
    pass


class NotComparable(CrnError):
    pass


class PreconditionFailed(CrnError):
    pass


class UnboundedRates(CrnError):
    pass


class TruncationLimit(CrnError):
    pass


class AllCensored(CrnError):
    pass


class DirectionUnknown(CrnError):
    pass


class InvalidParams(CrnError):
    pass
