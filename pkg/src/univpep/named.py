"""Closed-form functions on which known worst-case bounds are attained."""

from __future__ import annotations

import math

from .piecewise import PiecewiseFunction, Segment, Term, poly_segment

INF = math.inf


def _poly(coeffs, lo=-INF, hi=INF, anchor=0.0):
    return poly_segment(lo, hi, coeffs, anchor=anchor)


def cnm_tight(M: float = 1.0) -> PiecewiseFunction:
    """``M x^3/6 - x^2/2``: one cubic Newton step from 0 is a tie between two minimizers."""
    return PiecewiseFunction([_poly([0.0, 0.0, -0.5, M / 6])])


def newton_local_tight(M: float = 1.0, mu: float = 1.0) -> PiecewiseFunction:
    """``-M |x|^3/6 + mu x^2/2``, worst case for local Newton and (short steps) gradient descent."""
    return PiecewiseFunction([_poly([0, 0, mu / 2, M / 6], hi=0.0), _poly([0, 0, mu / 2, -M / 6], lo=0.0)])


def gm_tight_long(M: float = 1.0, L: float = 1.0) -> PiecewiseFunction:
    """``M |x|^3/6 + L x^2/2``, worst case for gradient descent with long steps."""
    return PiecewiseFunction([_poly([0, 0, L / 2, -M / 6], hi=0.0), _poly([0, 0, L / 2, M / 6], lo=0.0)])


def _c1_join(left_coeffs, right_cubic, b):
    """Constants ``(A, B)`` so that ``right_cubic + A x + B`` meets the left cubic in value and slope at ``b``."""
    from numpy.polynomial import Polynomial
    L, R = Polynomial(left_coeffs), Polynomial(right_cubic)
    A = L.deriv()(b) - R.deriv()(b)
    B = L(b) - R(b) - A * b
    return A, B


def dnm_hl_first(M: float, mu: float, a: float) -> PiecewiseFunction:
    """Two cubic pieces joined at ``(mu - a)/(2M)`` with continuous second derivative."""
    b = (mu - a) / (2 * M)
    left = [0.0, 0.0, mu / 2, -M / 6]
    A, B = _c1_join(left, [0.0, 0.0, a / 2, M / 6], b)
    return PiecewiseFunction([_poly(left, hi=b), _poly([B, A, a / 2, M / 6], lo=b)])


def dnm_hl_second(M: float, mu: float, a: float) -> PiecewiseFunction:
    """Three cubic pieces; curvature ``mu`` at the stationary point 0, kink in f''' at ``(a - mu)/(2M)``."""
    c = (a - mu) / (2 * M)
    if c > 0:
        raise ValueError("needs a <= mu")
    mid = [0.0, 0.0, mu / 2, M / 6]
    A, B = _c1_join(mid, [0.0, 0.0, a / 2, -M / 6], c)
    return PiecewiseFunction([
        _poly([B, A, a / 2, -M / 6], hi=c),
        _poly(mid, lo=c, hi=0.0),
        _poly([0.0, 0.0, mu / 2, -M / 6], lo=0.0),
    ])


def qsc_newton_tight(M: float = 1.0, mu: float = 1.0) -> PiecewiseFunction:
    """Exponential pieces on which one Newton step from 0 lands at ``-1/M`` with ``|f'| = (mu/M)(e - 2)``."""
    c = mu / M**2
    return PiecewiseFunction([
        Segment(-INF, 0.0, 0.0, (0.0, 2 * mu / M), (Term("exp", c, 0.0, -M),)),
        Segment(0.0, INF, 0.0, (0.0,), (Term("exp", c, 0.0, M),)),
    ])


def sc_newton_tight(R: float) -> PiecewiseFunction:
    """Self-concordant function where Newton from 0 (decrement ``R``) attains the exact one-step bound.

    Normalized so that ``f'(0) = -R`` and ``f''(0) = 1``; the inverse square
    root of ``f''`` is V-shaped with slopes -1 and +1.
    """
    if not 0 < R < 1:
        raise ValueError("needs 0 < R < 1")
    t1 = R - 1 + 2 * math.sqrt((1 - R) / (1 + R))
    y = (1 - t1 + R) / 2
    C = 2 / (1 - y) - 1 - R
    left_at_y = -(1 + R) * y - math.log(1 - y)
    K = left_at_y - C * y + math.log(1 - y)
    return PiecewiseFunction([
        Segment(-INF, y, 0.0, (0.0, -(1 + R)), (Term("log", -1.0, 1.0, -1.0),)),
        Segment(y, INF, 0.0, (K, C), (Term("log", -1.0, t1 - R, 1.0),)),
    ])


def dnm_sc_tight(R: float) -> PiecewiseFunction:
    """``(R-1)/R x - log(R - x)``: damped Newton from 0 attains its decrement bound at every step."""
    if not R > 0:
        raise ValueError("needs R > 0")
    return PiecewiseFunction([Segment(-INF, R, 0.0, (0.0, (R - 1) / R), (Term("log", -1.0, R, -1.0),))])


NAMED = {
    "cnm_tight": cnm_tight,
    "newton_local_tight": newton_local_tight,
    "gm_tight_short": newton_local_tight,
    "gm_tight_long": gm_tight_long,
    "dnm_hl_first": dnm_hl_first,
    "dnm_hl_second": dnm_hl_second,
    "qsc_newton_tight": qsc_newton_tight,
    "qsc_nm_tight": qsc_newton_tight,
    "sc_newton_tight": sc_newton_tight,
    "dnm_sc_tight": dnm_sc_tight,
}


def named_worst_case(name: str, **params) -> PiecewiseFunction:
    try:
        fn = NAMED[name]
    except KeyError:
        raise ValueError(f"unknown function {name!r}; known: {sorted(NAMED)}") from None
    return fn(**params)
