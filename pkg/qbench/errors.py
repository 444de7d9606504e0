"""Exceptions raised by qbench."""

from __future__ import annotations


class QBenchError(Exception):
    """Base class for all qbench errors."""


class DomainError(QBenchError, ValueError):
    """Argument outside the mathematical domain of a function."""


class ContractViolation(QBenchError, ValueError):
    """Caller broke a precondition (wrong variant, unnormalized vector, ...)."""


class ImproperPriorError(QBenchError, ValueError):
    """A uniform prior on a noncompact family cannot be sampled or normalized."""


class ConvergenceError(QBenchError):
    """Numerical integration or optimization did not reach its tolerance."""

    def __init__(self, message: str, error_estimate: float | None = None) -> None:
        super().__init__(message)
        self.error_estimate = error_estimate


class TruncationError(QBenchError):
    """Truncated ladder basis drops more eigenvalue mass than allowed."""

    def __init__(self, message: str, suggested_n_max: int) -> None:
        super().__init__(message)
        self.suggested_n_max = suggested_n_max


class UnsupportedEnsembleError(QBenchError, ValueError):
    """Ensemble is not part of the benchmark catalog for this operation."""


class SpecValidationError(QBenchError, ValueError):
    """User supplied spec did not validate. ``errors`` maps field -> error key."""

    def __init__(self, message: str, errors: dict[str, str] | None = None) -> None:
        super().__init__(message)
        self.errors = errors or {}


class ExperimentFormatError(QBenchError, ValueError):
    """Experiment file could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None) -> None:
        super().__init__(message)
        self.line = line
        self.column = column
