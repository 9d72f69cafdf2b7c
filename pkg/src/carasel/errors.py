"""Exception taxonomy shared by every module.

The split mirrors the CLI exit codes: parse failures, violated
preconditions, constructions whose own certification failed, and solves
that ran to completion but could not meet the requested tolerance.
"""

from __future__ import annotations


class CaraselError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(CaraselError):
    """Structurally invalid input: dimension mismatch, empty set where a
    nonempty one is required, malformed table, unknown mode."""


class PreconditionError(CaraselError):
    """A documented precondition of an operation does not hold for the
    given data (zero-mass cell, irreflexivity violation, point outside
    its claimed set, ...)."""


class ConstructionError(CaraselError):
    """A construction ran but its own certification failed: an infeasible
    node inside a claimed domain, a membership check that does not close,
    or a cell-constancy requirement broken by the output."""


class NoCertificateError(CaraselError):
    """A solve exhausted its phases without reaching the requested
    tolerance.  Carries the best residual achieved."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class ParseError(CaraselError):
    """A problem or certificate file failed to parse or validate.  Line
    and column are set when the underlying JSON decoder provides them."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        super().__init__(message)
        self.line = line
        self.column = column
