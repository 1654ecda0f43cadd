"""Exception taxonomy.

Two trunks: ValidationError for inputs that can never work (CLI exit code 1),
NumericError for computations that failed at runtime (CLI exit code 2).
"""
from __future__ import annotations


class ValidationError(ValueError):
    """Inputs outside the domain where the method is defined."""


class MomentDomainError(ValidationError):
    """Exponential moment requested outside the distribution's finite band."""


class DegenerateDistributionError(ValidationError):
    """Step distribution carries no variance; hedging ratios are undefined."""


class StripError(ValidationError):
    """Transform evaluated outside its strip of convergence."""


class BracketingError(ValidationError):
    """A scan bracket does not contain the optimum it is meant to locate."""


class NumericError(RuntimeError):
    """A numerical routine failed to reach its target accuracy."""


class QuadratureError(NumericError):
    """Panel doubling exhausted before the integral stabilised."""


class ContourError(NumericError):
    """Contour truncation tail exceeds tolerance; enlarge p_max."""
