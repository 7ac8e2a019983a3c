import math

import numpy as np
import pytest

from univpep import methods as mt
from univpep.classes import hessian_lipschitz, membership_residual, quasi_self_concordant, self_concordant
from univpep.named import NAMED, named_worst_case


def _residual(fn, spec, lo, hi, n=4001):
    return membership_residual(fn, spec, np.linspace(lo, hi, n)).max_residual


@pytest.mark.parametrize("name", ["cnm_tight", "newton_local_tight", "gm_tight_long"])
def test_hessian_lipschitz_members(name):
    assert _residual(named_worst_case(name, M=2.0), hessian_lipschitz(2.0), -3, 3) <= 1e-9


@pytest.mark.parametrize("name", ["dnm_hl_first", "dnm_hl_second"])
@pytest.mark.parametrize("a", [-0.5, 0.0, 0.5])
def test_dnm_families(name, a):
    fn = named_worst_case(name, M=1.0, mu=1.0, a=a)
    assert _residual(fn, hessian_lipschitz(1.0), -3, 3) <= 1e-9
    assert float(fn.derivative(0.0, 1)) == pytest.approx(0.0, abs=1e-15)
    assert float(fn.derivative(0.0, 2)) == pytest.approx(1.0)


def test_qsc_newton_tight():
    fn = named_worst_case("qsc_nm_tight", M=1.0, mu=1.0)
    assert _residual(fn, quasi_self_concordant(1.0), -4, 4) <= 1e-9
    assert float(fn.derivative(0.0, 2)) == pytest.approx(1.0)
    x1 = mt.step(mt.newton(), fn, 0.0)
    assert x1 == pytest.approx(-1.0)
    assert abs(float(fn.derivative(x1, 1))) == pytest.approx(mt.qsc_newton(1.0, 1.0, 1.0))


@pytest.mark.parametrize("R", [0.1, 0.5, 0.9])
def test_sc_newton_tight(R):
    fn = named_worst_case("sc_newton_tight", R=R)
    assert _residual(fn, self_concordant(), -0.9, 0.95) <= 1e-8
    assert float(fn.derivative(0.0, 1)) == pytest.approx(-R)
    assert float(fn.derivative(0.0, 2)) == pytest.approx(1.0)
    tr = mt.run(mt.newton(), fn, 0.0, 1)
    assert tr.newton_decrement[1] == pytest.approx(mt.sc_newton(R), rel=1e-8)


def test_dnm_sc_tight_follows_bound():
    R = 0.4
    fn = named_worst_case("dnm_sc_tight", R=R)
    # stay clear of the pole, where the difference quotient for f''' loses accuracy
    assert _residual(fn, self_concordant(), -3, R - 0.05) <= 1e-6
    lam, x = R, 0.0
    for k in range(4):
        gamma = mt.dnm_sc_max_gamma(lam)
        x = mt.step(mt.damped_newton(gamma), fn, x)
        lam = mt.dnm_sc(lam, gamma)
        g, h = float(fn.derivative(x, 1)), float(fn.derivative(x, 2))
        assert abs(g) / math.sqrt(h) == pytest.approx(lam, rel=1e-9)


def test_registry():
    assert NAMED["qsc_nm_tight"] is NAMED["qsc_newton_tight"]
    with pytest.raises(ValueError):
        named_worst_case("nope")
    with pytest.raises(ValueError):
        named_worst_case("sc_newton_tight", R=1.5)
