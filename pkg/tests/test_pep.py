import math

import numpy as np
import pytest

from univpep import methods as mt
from univpep.classes import basic_lipschitz, hessian_lipschitz, quasi_self_concordant, self_concordant
from univpep.interpolation import Dataset
from univpep.pep import (CertificationError, FormulationError, InitialCondition, PepProblem, SolverConfig, certify,
                         formulate, known_value, solve, verify)

FAST = SolverConfig(restarts=32)


def _gnm1(eta=0.5, relation="eq"):
    return PepProblem(quasi_self_concordant(1.0), mt.grad_reg_newton1(1.0), 1, "eta_last",
                      InitialCondition("eta", eta, relation))


def test_problem_json_round_trip():
    p = PepProblem(hessian_lipschitz(2.0), mt.cubic_newton(2.0, 0.5), 3, "abs_grad_best",
                   InitialCondition("func_gap", 1.5, "le"), stationarity=True)
    assert PepProblem.from_json(p.to_json()) == p


def test_problem_validation():
    with pytest.raises(ValueError):
        InitialCondition("func_gap", 0.0)
    with pytest.raises(ValueError):
        InitialCondition("speed", 1.0)
    with pytest.raises(ValueError):
        PepProblem(self_concordant(), mt.newton(), 0, "newton_decrement_last", InitialCondition("newton_decrement", 0.5))
    with pytest.raises(FormulationError):
        formulate(PepProblem(basic_lipschitz(1.0, 1.0), mt.newton(), 1, "abs_grad_last", InitialCondition("abs_grad", 1)))
    with pytest.raises(FormulationError):
        formulate(PepProblem(quasi_self_concordant(1.0), mt.newton(), 1, "func_gap_last",
                             InitialCondition("abs_grad", 1.0)))


def test_known_values():
    assert known_value(_gnm1(0.5)) == pytest.approx(mt.gnm1_qsc(0.5))
    assert known_value(_gnm1(0.5, "le")) is None
    sc = PepProblem(self_concordant(), mt.newton(), 1, "newton_decrement_last", InitialCondition("newton_decrement", 0.5))
    assert known_value(sc) == pytest.approx(mt.sc_newton(0.5))


def test_certify_accepts_true_trajectory():
    # GNM1 on exp: eta is 1 everywhere and each step moves by -1/2
    x = np.array([0.0, -0.5])
    data = Dataset(x, g=np.exp(x), h=np.exp(x))
    rep = certify(data, _gnm1(1.0))
    assert rep.feasible
    assert rep.replay_residual <= 1e-9
    assert rep.membership <= 1e-4


def test_certify_rejects_infeasible_witness():
    data = Dataset([0.0, -0.5], g=[1.0, 1.0], h=[1.0, math.exp(3.0)])
    with pytest.raises(CertificationError, match="interpolation"):
        certify(data, _gnm1(1.0))


def test_certify_rejects_method_violation():
    x = np.array([0.0, -0.5])
    with pytest.raises(CertificationError, match="method"):
        certify(Dataset(x, g=np.exp(x), h=np.exp(x)), _gnm1(1.0), method_residual=1e-3)


def test_solve_gnm1_matches_bound_and_verifies():
    p = _gnm1(0.5)
    sol = solve(p, FAST)
    assert sol.value == pytest.approx(mt.gnm1_qsc(0.5), abs=1e-6)
    assert sol.known == pytest.approx(mt.gnm1_qsc(0.5))
    assert "gap_to_known_value" not in sol.flags
    rep = verify(sol, p)
    assert rep.feasible and rep.replay_residual <= 1e-6
    # the witness alone, without the search variables, must certify too
    sol.z = None
    assert verify(sol, p).feasible


def test_solve_is_deterministic():
    a = solve(_gnm1(0.5), FAST)
    b = solve(_gnm1(0.5), FAST)
    assert a.value == b.value
    np.testing.assert_array_equal(a.z, b.z)


def test_solve_sc_newton_one_step():
    p = PepProblem(self_concordant(), mt.newton(), 1, "newton_decrement_last", InitialCondition("newton_decrement", 0.5))
    sol = solve(p, FAST)
    assert sol.value == pytest.approx(mt.sc_newton(0.5), abs=1e-6)
    assert sol.membership <= 1e-4
