from .config import settings
from .exceptions import (
    EXIT_ERROR,
    EXIT_OK,
    EXIT_VIOLATION,
    ConfigurationError,
    DomainError,
    EstimationError,
    EvaluationError,
    InequalityViolation,
    NumericError,
    OptimizationError,
    WienerVarError,
)

__all__ = [
    "settings",
    "EXIT_OK", "EXIT_VIOLATION", "EXIT_ERROR",
    "WienerVarError", "ConfigurationError", "EvaluationError", "EstimationError",
    "NumericError", "DomainError", "OptimizationError", "InequalityViolation",
]
