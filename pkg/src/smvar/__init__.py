"""Numerical companion for the Schrodinger-Maxwell system on a compact 3-manifold
(modelled as a conformally flat 3-torus): the Maxwell reduction, the reduced energy,
critical-point solvers and the threshold constants of the nonlinearities."""
from .errors import ConfigError, DomainTooSmallError, ManifoldMismatchError, SmvarError, SolverError
from .manifold import Manifold, ScalarField, build_torus

__version__ = "0.1.0"

__all__ = ["Manifold", "ScalarField", "build_torus", "SmvarError", "ConfigError", "SolverError",
           "ManifoldMismatchError", "DomainTooSmallError", "__version__"]
