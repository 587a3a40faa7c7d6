"""Two-phase path-following smoothing Newton method for symmetric-cone programs."""

from .cones import ConeSpec, Orthant, Psd, SecondOrder
from .errors import DomainError, NumericalError, ParameterError, ParseError, PfsnmError, StructuralError
from .problem import LinearMap, ProblemData, prune_rows
from .solver import SolveResult, SolverConfig, Status, certified_sigma, solve

__all__ = [
    "ConeSpec", "Orthant", "SecondOrder", "Psd",
    "LinearMap", "ProblemData", "prune_rows",
    "SolverConfig", "SolveResult", "Status", "certified_sigma", "solve",
    "PfsnmError", "StructuralError", "DomainError", "ParameterError", "NumericalError", "ParseError",
]
