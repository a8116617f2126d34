"""Finite-difference trust-region minimization of black-box functions."""
from .driver import Mode, RunRecord, SolverConfig, Termination, default_config, solve
from .fdgrad import bounded_gradient, forward_gradient, initial_tau
from .kernels import BACKEND
from .problem import FeasibleSet, InfeasibleEvaluationError, Problem

__all__ = [
    "BACKEND",
    "FeasibleSet",
    "InfeasibleEvaluationError",
    "Mode",
    "Problem",
    "RunRecord",
    "SolverConfig",
    "Termination",
    "bounded_gradient",
    "default_config",
    "forward_gradient",
    "initial_tau",
    "solve",
]
__version__ = "0.1.0"
