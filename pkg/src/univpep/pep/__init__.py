from .known import compose_sc_newton, known_value
from .problem import (INITIALS, MEASURES, Formulation, FormulationError, InitialCondition, PepProblem,
                      formulate)
from .solver import (CertificateReport, CertificationError, NoFeasiblePointError, PepSolution, RelaxedSolution,
                     SolverConfig, certify, solve, solve_relaxed, verify)

__all__ = [
    "INITIALS", "MEASURES", "Formulation", "FormulationError", "InitialCondition", "PepProblem", "formulate",
    "CertificateReport", "CertificationError", "NoFeasiblePointError", "PepSolution", "RelaxedSolution",
    "SolverConfig", "certify", "solve", "solve_relaxed", "verify", "known_value", "compose_sc_newton",
]
