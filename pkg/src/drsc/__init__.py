"""Subspace clustering (TSC, SSC, SSC-OMP) after random dimensionality reduction."""
from .errors import (ConfigurationError, DimensionError, DRSCError, NumericalError, ParseError,
                     UsageError, ValidationError)

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DimensionError", "DRSCError", "NumericalError", "ParseError",
           "UsageError", "ValidationError", "__version__"]
