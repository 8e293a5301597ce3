"""
Exception hierarchy for robust multiple comparison procedures.

Every error carries a ``kind`` string that the CLI turns into a structured
diagnostic, plus an optional ``details`` dict with the offending values.
"""

from typing import Any, Dict, Optional


class RobustMCTError(Exception):
    """Base class for all package errors."""

    kind = "error"

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}

    def to_dict(self) -> Dict[str, Any]:
        """Structured diagnostic for report output."""
        return {"error": self.kind, "message": self.message, "details": self.details}


class InvalidDesignError(RobustMCTError):
    """The layout cannot support the requested analysis (too few groups, size-1 groups, ...)."""

    kind = "invalid-design"


class DataFormatError(InvalidDesignError):
    """Input file problems, with the offending line numbers."""

    kind = "data-format"

    def __init__(self, message: str, lines: Optional[list] = None, details: Optional[Dict[str, Any]] = None):
        details = dict(details or {})
        if lines:
            details["lines"] = list(lines)
        super().__init__(message, details)
        self.lines = list(lines or [])


class DegenerateDataError(RobustMCTError):
    """Data carry no variability where the estimator needs some."""

    kind = "degenerate-data"


class NumericDomainError(RobustMCTError):
    """A matrix or argument left the numeric domain (indefinite correlation, singular covariance)."""

    kind = "numeric-domain"


class ConvergenceError(RobustMCTError):
    """An iterative fit did not converge and the caller asked for a hard failure."""

    kind = "non-convergence"


class ConfigError(RobustMCTError):
    """Configuration or command-line options failed validation."""

    kind = "config"
