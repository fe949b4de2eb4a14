"""Steady periodic water waves on infinite depth with piecewise smooth vorticity."""

from .errors import (AdmissibilityError, ConfigurationError, DeepStokesError, DomainError,
                     MarginViolation, NewtonFailure, NoBifurcationFound, NumericalFailure)
from .vorticity import VorticitySegment, VorticitySpec, check_admissible

__version__ = "0.1.0"

__all__ = [
    "AdmissibilityError", "ConfigurationError", "DeepStokesError", "DomainError",
    "MarginViolation", "NewtonFailure", "NoBifurcationFound", "NumericalFailure",
    "VorticitySegment", "VorticitySpec", "check_admissible",
]
