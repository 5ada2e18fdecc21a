"""Exception hierarchy for roughfilter.

The CLI maps each family to its own exit code, so library code raises the
most specific class that applies.
"""
from typing import Optional


class RoughFilterError(Exception):
    """Base class for all roughfilter errors."""


class ConfigError(RoughFilterError, ValueError):
    """Invalid parameters, flags or configuration files."""


class DataError(RoughFilterError, ValueError):
    """Malformed or unusable input data."""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class NumericalError(RoughFilterError, ArithmeticError):
    """A computation produced no usable result."""


class GenerationError(NumericalError):
    """Circulant embedding of the fGn covariance is not positive semi-definite."""
