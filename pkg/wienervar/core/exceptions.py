"""
Error types shared by every module.

Each error carries the process exit code the CLI reports for it, the way an
HTTP error carries its status code.
"""

from typing import Any, Optional


EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_ERROR = 2


class WienerVarError(Exception):
    """Base error with a human readable detail and an exit code."""

    exit_code: int = EXIT_ERROR

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> dict:
        return {"error": type(self).__name__, "detail": self.detail, "context": self.context}


class ConfigurationError(WienerVarError):
    """Invalid grid, misaligned knots, malformed descriptor."""


class EvaluationError(WienerVarError):
    """A feedback rule or functional produced a non-finite value."""


class EstimationError(WienerVarError):
    """A Monte Carlo estimate could not be formed (overflow, all paths rejected, degenerate weights)."""


class NumericError(WienerVarError):
    """Quadrature or root finding failed to reach its tolerance."""


class DomainError(WienerVarError):
    """An argument lies outside the mathematical domain of the operation."""


class OptimizationError(WienerVarError):
    """The drift optimizer diverged; the partial trace is attached."""

    def __init__(self, detail: str, trace: Optional[Any] = None, **context: Any):
        super().__init__(detail, **context)
        self.trace = trace


class InequalityViolation(WienerVarError):
    """A statistically significant violation of an inequality that must hold."""

    exit_code = EXIT_VIOLATION
