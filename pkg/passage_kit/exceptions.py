"""
Custom exceptions for passage-kit.
"""
from typing import Any, Optional


class PassageKitError(Exception):
    """Base exception for passage-kit errors."""
    pass


class ConfigurationError(PassageKitError):
    """Error related to experiment configuration."""
    pass


class ValidationError(PassageKitError, ValueError):
    """A triplet, process spec or data set violates its invariants."""
    pass


class DomainError(PassageKitError, ValueError):
    """An argument lies outside the domain of an operation."""
    pass


class DegenerateSpecError(PassageKitError):
    """A process spec cannot be evaluated (nonpositive series factor, wrong variant)."""
    pass


class IdentificationError(PassageKitError):
    """Transform data is insufficient for the requested fit."""
    pass


class NonConvergenceError(PassageKitError):
    """A root search, series, quadrature or fit did not reach its tolerance."""
    def __init__(self, message: str, best: Optional[Any] = None):
        super().__init__(message)
        self.best = best


class AcceptanceError(PassageKitError):
    """A Monte Carlo comparison fell outside its acceptance band."""
    def __init__(self, message: str, reports: Optional[list] = None):
        super().__init__(message)
        self.reports = reports or []
