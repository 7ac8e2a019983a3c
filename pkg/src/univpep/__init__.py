"""Worst-case analysis of one-dimensional second-order methods over smooth function classes."""

from .classes import (ClassSpec, basic_lipschitz, generalized_sc, hessian_lipschitz, membership_residual,
                      quasi_self_concordant, self_concordant, smooth, strongly_convex_hl)
from .extremal import InfeasibleError, integral_bounds, reconstruct_interpolant
from .interpolation import Dataset, FeasibilityVerdict, check, classical_necessary
from .methods import MethodSpec, Trajectory, analytic_bound, run
from .named import named_worst_case
from .piecewise import PiecewiseFunction
from .pep import InitialCondition, PepProblem, PepSolution, SolverConfig, solve, verify

__all__ = [
    "ClassSpec", "basic_lipschitz", "generalized_sc", "hessian_lipschitz", "membership_residual",
    "quasi_self_concordant", "self_concordant", "smooth", "strongly_convex_hl",
    "InfeasibleError", "integral_bounds", "reconstruct_interpolant",
    "Dataset", "FeasibilityVerdict", "check", "classical_necessary",
    "MethodSpec", "Trajectory", "analytic_bound", "run", "named_worst_case", "PiecewiseFunction",
    "InitialCondition", "PepProblem", "PepSolution", "SolverConfig", "solve", "verify",
]
