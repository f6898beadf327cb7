"""EDMD Koopman-operator estimation with exact variance formulas and
certified finite-data error bounds, verified on analytically solvable
systems."""

from . import bounds, dictionaries, edmd, galerkin, spectral, studies, systems, variance
from .kernels import backend_name

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "dictionaries",
    "edmd",
    "galerkin",
    "spectral",
    "studies",
    "systems",
    "variance",
    "backend_name",
    "__version__",
]
