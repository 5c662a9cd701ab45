"""Hybrid peridynamic / finite-element simulator for dynamic fracture in
saturated porous media.

The solid skeleton is an ordinary state-based peridynamic body in plane
strain; pore pressure is a Galerkin FE field on the coincident quadrilateral
mesh.  The two are advanced with a staggered explicit/implicit scheme.
"""

from ._ext import BACKEND
from .errors import (ConfigurationError, DivergenceError, PorePDError, SolverError, StabilityError,
                     ValidationError)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "ConfigurationError",
    "DivergenceError",
    "PorePDError",
    "SolverError",
    "StabilityError",
    "ValidationError",
    "__version__",
]
