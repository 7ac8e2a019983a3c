import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from univpep.classes import DomainError
from univpep.piecewise import PiecewiseFunction, Segment, Term, infinite_segment, linear_combination, poly_segment


def _mixed():
    return PiecewiseFunction([
        poly_segment(-math.inf, 0.0, [1.0, -1.0, 0.5], anchor=0.0),
        Segment(0.0, 1.0, 0.0, (0.5, 0.0), (Term("exp", 0.5, 0.0, -1.0),)),
        Segment(1.0, math.inf, 1.0, (0.0, 0.2), (Term("log", 2.0, 1.0, 1.0),)),
    ])


@pytest.mark.parametrize("kind, nu", [("power", 2.5), ("power", -1.5), ("exp", 1.0), ("log", 1.0), ("xlogx", 1.0)])
def test_term_derivatives_match_finite_differences(kind, nu):
    term = Term(kind, 1.3, 0.7, 0.9, nu)
    t = np.linspace(0.1, 2.0, 7)
    h = 1e-6
    for k in range(3):
        fd = (term.derivative(t + h, k) - term.derivative(t - h, k)) / (2 * h)
        np.testing.assert_allclose(term.derivative(t, k + 1), fd, rtol=1e-6, atol=1e-6)


def test_integral_matches_quadrature():
    f = _mixed()
    F = f.integral(-1.0, 0.0)
    for b in (-0.5, 0.3, 1.0, 2.5):
        cuts = [-1.0] + [c for c in f.breakpoints if -1.0 < c < b] + [b]
        ref = sum(quad(lambda x: float(f(x)), l, r, epsabs=1e-13, epsrel=1e-13)[0] for l, r in zip(cuts, cuts[1:]))
        assert float(F(b)) == pytest.approx(ref, abs=1e-12)


def test_integral_is_antiderivative():
    f = _mixed()
    F = f.integral(0.5, 3.0)
    x = np.array([-2.0, -0.1, 0.4, 0.9, 1.5, 4.0])
    np.testing.assert_allclose(F.derivative(x, 1), f(x), rtol=1e-12, atol=1e-12)
    assert float(F(0.5)) == pytest.approx(3.0)


@given(st.lists(st.floats(-3, 3), min_size=2, max_size=5), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=50)
def test_linear_combination_is_pointwise(coeffs, w1, w2):
    f = _mixed()
    g = PiecewiseFunction([poly_segment(-math.inf, 0.5, coeffs, 0.0), poly_segment(0.5, math.inf, coeffs, 0.0)])
    c = linear_combination([f, g], [w1, w2])
    x = np.array([-1.0, 0.2, 0.7, 1.3, 3.0])
    np.testing.assert_allclose(c(x), w1 * f(x) + w2 * g(x), rtol=1e-9, atol=1e-9)


def test_json_round_trip():
    f = _mixed()
    g = PiecewiseFunction.from_json(f.to_json())
    x = np.linspace(-2, 3, 11)
    np.testing.assert_array_equal(f(x), g(x))


def test_infinite_segment_and_domain():
    f = PiecewiseFunction([poly_segment(0.0, 1.0, [1.0]), infinite_segment(1.0, 2.0)])
    assert f(1.5) == math.inf
    with pytest.raises(DomainError):
        f(3.0)
    with pytest.raises(DomainError):
        f.integral(0.0)


def test_segments_must_be_contiguous():
    with pytest.raises(ValueError):
        PiecewiseFunction([poly_segment(0.0, 1.0, [1.0]), poly_segment(1.5, 2.0, [1.0])])
