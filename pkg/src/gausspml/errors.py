"""Semantic exception hierarchy.

Public operations never raise bare ValueError/RuntimeError; callers can
rely on these types to separate bad inputs from numerical breakdowns.
"""


class GaussPmlError(Exception):
    """Base error for this package."""


class DomainError(GaussPmlError, ValueError):
    """An argument lies outside the operation's documented domain."""


class PreconditionError(GaussPmlError, ValueError):
    """A stated precondition (e.g. a root bracket) is violated."""


class ModelError(GaussPmlError):
    """A supplied model is unusable (e.g. non-normalizable density)."""


class NumericalError(GaussPmlError, RuntimeError):
    """A numerical routine failed to reach its accuracy contract.

    Attributes:
        operation: name of the failing operation, for diagnostics.
        last_estimate: best value available when the failure was raised,
            or None if nothing usable was produced.
    """

    def __init__(self, message, operation=None, last_estimate=None):
        super().__init__(message)
        self.operation = operation
        self.last_estimate = last_estimate
