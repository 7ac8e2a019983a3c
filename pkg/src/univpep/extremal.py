"""Extremal interpolants, integral bounds and interpolant reconstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .classes import ClassSpec, DomainError, beta, tilde_transform
from .interpolation import DEGENERATE_TOL, Dataset, check, lifted_lower_bounds
from .piecewise import (PiecewiseFunction, Segment, Term, concatenate, infinite_segment,
                        linear_combination, poly_segment, term_segment)


class InfeasibleError(ValueError):
    """The data admits no interpolant in the requested class."""


@dataclass
class EnvelopePair:
    lower: PiecewiseFunction
    upper: PiecewiseFunction


def _nu_segment(lo: float, hi: float, t0: float, slope: float, alpha: float) -> Segment:
    """Segment equal to ``nu(t0 + slope * (x - lo))`` on ``[lo, hi]``."""
    if alpha == 0:
        return poly_segment(lo, hi, [t0, slope], anchor=lo)
    if alpha == 1:
        return term_segment(lo, hi, Term("exp", 1.0, t0, slope), anchor=lo)
    return term_segment(lo, hi, Term("power", 1.0, t0, slope, beta(alpha)), anchor=lo)


def basic_envelopes(x1: float, v1: float, x2: float, v2: float, M: float, alpha: float,
                    nonneg: bool = True) -> EnvelopePair:
    """Pointwise smallest and largest basic-class interpolants of two points on [x1, x2]."""
    if not x1 < x2:
        raise ValueError("basic_envelopes needs x1 < x2")
    if nonneg and (v1 < 0 or v2 < 0):
        raise DomainError("negative value for a sign-constrained class")
    dx = x2 - x1
    if nonneg and alpha >= 1 and (v1 == 0 or v2 == 0):
        if v1 == 0 and v2 == 0:
            z = PiecewiseFunction([poly_segment(x1, x2, [0.0])])
            return EnvelopePair(z, z)
        raise InfeasibleError("a zero and a positive value cannot be interpolated")
    t1 = float(tilde_transform(v1, alpha)) if nonneg else v1
    t2 = float(tilde_transform(v2, alpha)) if nonneg else v2
    if nonneg and abs(t1 - t2) > M * dx * (1 + 1e-12) + 1e-15:
        raise InfeasibleError("values violate the transformed Lipschitz condition")
    s = 1.0 if (alpha <= 1 or not nonneg) else -1.0
    a = alpha if nonneg else 0.0
    mid = 0.5 * (x1 + x2)

    def two_pieces(sign, knot):
        knot = min(max(knot, x1), x2)
        return PiecewiseFunction([
            _nu_segment(x1, knot, t1, sign * M, a),
            _nu_segment(knot, x2, t2 - sign * M * (knot - x2), -sign * M, a),
        ])

    # lower envelope
    if a >= 1 or not nonneg or t1 + t2 >= M * dx:
        lower = two_pieces(-s, mid + s * (t1 - t2) / (2 * M))
    else:
        p, q = x1 + t1 / M, x2 - t2 / M
        lower = PiecewiseFunction([
            _nu_segment(x1, p, t1, -M, a),
            poly_segment(p, q, [0.0]),
            _nu_segment(q, x2, 0.0, M, a),
        ])
    # upper envelope
    if a <= 1 or t1 + t2 > M * dx:
        upper = two_pieces(s, mid - s * (t1 - t2) / (2 * M))
    else:
        p, q = x1 + t1 / M, x2 - t2 / M
        upper = PiecewiseFunction([
            _nu_segment(x1, p, t1, -M, a),
            infinite_segment(p, q),
            _nu_segment(q, x2, 0.0, M, a),
        ])
    return EnvelopePair(lower, upper)


def extremal_envelopes_basic(p: Sequence[float], q: Sequence[float], spec: ClassSpec) -> EnvelopePair:
    """Envelopes for two points ``(x, v)`` of the basic function of ``spec``."""
    (x1, v1), (x2, v2) = sorted([tuple(p[:2]), tuple(q[:2])])
    return basic_envelopes(x1, v1 - spec.mu, x2, v2 - spec.mu, spec.M, spec.alpha, spec.nonneg)


def _lifted_interval(x1, x2, G1, G2, M, alpha, nonneg) -> tuple[float, float]:
    """Feasible range of ``F(x2) - F(x1)`` given derivatives ``G1, G2``."""
    if x1 == x2:
        return 0.0, 0.0
    if x2 < x1:
        lo, hi = _lifted_interval(x2, x1, G2, G1, M, alpha, nonneg)
        return -hi, -lo
    if nonneg and (G1 < 0 or G2 < 0):
        raise DomainError("negative derivative for a sign-constrained class")
    if nonneg and alpha != 1 and (G1 == 0 or G2 == 0):
        if G1 == 0 and G2 == 0:
            return 0.0, 0.0
        if alpha > 1:
            return math.inf, -math.inf
    if nonneg and alpha != 1:
        t1, t2 = (float(tilde_transform(v, alpha)) if v > 0 else 0.0 for v in (G1, G2))
        if abs(t1 - t2) > M * (x2 - x1) * (1 + 1e-12) + 1e-15:
            return math.inf, -math.inf
    lo, hi = -math.inf, math.inf
    for _, rhs, act in lifted_lower_bounds(x2 - x1, G1, G2, M, alpha, nonneg):
        if act[0]:
            lo = max(lo, float(rhs[0]))
    for _, rhs, act in lifted_lower_bounds(x1 - x2, G2, G1, M, alpha, nonneg):
        if act[0]:
            hi = min(hi, -float(rhs[0]))
    return lo, hi


def _hl_value_interval(x1, g1, h1, x2, g2, h2, M) -> tuple[float, float]:
    """Feasible range of ``f(x2) - f(x1)`` for Hessian-Lipschitz data."""
    if x1 == x2:
        return 0.0, 0.0
    lo, lo_ok = _hl_one_sided(x1, g1, h1, x2, g2, h2, M)
    up, up_ok = _hl_one_sided(x2, g2, h2, x1, g1, h1, M)
    if not (lo_ok and up_ok):
        return math.inf, -math.inf
    return lo, -up


def _hl_one_sided(xi, gi, hi, xj, gj, hj, M):
    """Lower bound on ``f_j - f_i`` and whether the gradient data is consistent."""
    dx = xj - xi
    adx = abs(dx)
    dh = hj - hi
    Tg = gj - gi - hi * dx
    if abs(dh) > M * adx * (1 + 1e-12) + 1e-15:
        return math.inf, False
    D = dh + M * adx
    base = gi * dx + hi * dx * dx / 2
    if D <= DEGENERATE_TOL:
        if abs(Tg + M / 2 * dx * adx) > 1e-9:
            return math.inf, False
        return base - M / 6 * adx**3, True
    return base - M / 6 * adx**3 + (Tg + M / 2 * dx * adx) ** 2 / (2 * D) + D**3 / (96 * M**2), True


def integral_bounds(p: Sequence[float], q: Sequence[float], spec: ClassSpec, on: str | None = None):
    """Closed-form range of the integrated quantity between two points.

    ``p`` and ``q`` are ``(x, f, g, h)`` tuples (unused slots may be ``None``).
    For second-order classes the default is the range of ``g(x_q) - g(x_p)``
    given the second derivatives; ``on="f"`` (default for the
    Hessian-Lipschitz class) gives the range of ``f(x_q) - f(x_p)``.
    An empty range is returned as ``(inf, -inf)``.
    """
    x1, x2 = p[0], q[0]
    if on is None:
        on = "f" if (spec.kind == "hl" or spec.order < 2) else "g"
    if spec.order == 0:
        raise ValueError("basic classes have no integrated quantity")
    if spec.order == 2 and on == "f":
        if spec.kind != "hl":
            raise ValueError("value bounds are only available for the Hessian-Lipschitz class")
        return _hl_value_interval(x1, p[2], p[3], x2, q[2], q[3], spec.M)
    if spec.order == 2:
        G1, G2 = p[3] - spec.mu, q[3] - spec.mu
    else:
        G1, G2 = p[2] - spec.mu, q[2] - spec.mu
    lo, hi = _lifted_interval(x1, x2, G1, G2, spec.M, spec.alpha, spec.nonneg)
    if lo > hi:
        return lo, hi
    # undo the shift: F = quantity - mu * x
    shift = spec.mu * (x2 - x1)
    return lo + shift, hi + shift


# ---------------------------------------------------------------- Hessian-Lipschitz gradients

def hl_gradient_breakpoints(x1, g1, h1, x2, g2, h2, M):
    """Breakpoints of the smallest and largest gradient interpolants.

    Works with ``Fraction`` inputs, in which case degeneracy is detected exactly.
    Returns ``(y1, y2, z1, z2)``; a ``None`` pair marks a degenerate envelope.
    """
    dx = x2 - x1
    dh = h2 - h1
    Tg = g2 - g1 - h1 * dx
    Dp = dh + M * dx
    Dm = M * dx - dh
    exact = all(isinstance(v, (int, Fraction)) for v in (x1, g1, h1, x2, g2, h2, M))
    tol = 0 if exact else DEGENERATE_TOL * max(1.0, abs(M * dx))
    if Dp <= tol:
        y1 = y2 = None
    else:
        y1 = x2 - (Tg + M * dx * dx / 2) / Dp - Dp / (4 * M)
        y2 = y1 + Dp / (2 * M)
    if Dm <= tol:
        z1 = z2 = None
    else:
        z1 = x2 + (Tg - M * dx * dx / 2) / Dm - Dm / (4 * M)
        z2 = z1 + Dm / (2 * M)
    return y1, y2, z1, z2


def _hessian_pieces(x1, h1, x2, h2, M, b1, b2, sign) -> PiecewiseFunction:
    """Piecewise-linear second derivative with slopes sign*M, -sign*M, sign*M."""
    if b1 is None:
        return PiecewiseFunction([poly_segment(x1, x2, [h1, sign * M], anchor=x1)])
    b1 = min(max(float(b1), x1), x2)
    b2 = min(max(float(b2), b1), x2)
    peak = h1 + sign * M * (b1 - x1)
    return PiecewiseFunction([
        poly_segment(x1, b1, [h1, sign * M], anchor=x1),
        poly_segment(b1, b2, [peak, -sign * M], anchor=b1),
        poly_segment(b2, x2, [h2, sign * M], anchor=x2),
    ])


def extremal_gradients_smooth(p: Sequence[float], q: Sequence[float], spec: ClassSpec) -> EnvelopePair:
    """Smallest and largest gradient interpolants for Hessian-Lipschitz data ``(x, g, h)``."""
    if spec.kind != "hl":
        raise ValueError("gradient envelopes are implemented for the Hessian-Lipschitz class")
    (x1, g1, h1), (x2, g2, h2) = sorted([tuple(p), tuple(q)], key=lambda r: r[0])
    if not x1 < x2:
        raise ValueError("points must have distinct x")
    M = spec.M
    if abs(h2 - h1) > M * (x2 - x1) * (1 + 1e-12) + 1e-15:
        raise InfeasibleError("second derivatives violate the Lipschitz condition")
    y1, y2, z1, z2 = hl_gradient_breakpoints(x1, g1, h1, x2, g2, h2, M)
    x1f, x2f, g1f, h1f, h2f, Mf = (float(v) for v in (x1, x2, g1, h1, h2, M))
    hmin = _hessian_pieces(x1f, h1f, x2f, h2f, Mf, y1, y2, -1.0)
    hmax = _hessian_pieces(x1f, h1f, x2f, h2f, Mf, z1, z2, 1.0)
    return EnvelopePair(hmin.integral(x1f, g1f), hmax.integral(x1f, g1f))


# ---------------------------------------------------------------- reconstruction

def _clip_to_interval(D, lo, hi, tol=1e-8):
    scale = 1.0 + abs(D)
    if D < lo - tol * scale or D > hi + tol * scale:
        raise InfeasibleError(f"increment {D} outside the feasible range [{lo}, {hi}]")
    return min(max(D, lo), hi)


def _acut(env: EnvelopePair, a: float) -> PiecewiseFunction:
    """``min(upper, max(lower, a))`` as a piecewise function."""
    lo_f, up_f = env.lower, env.upper
    x1, x2 = lo_f.domain
    cuts = {x1, x2, *lo_f.breakpoints, *up_f.breakpoints}
    for fn in (lo_f, up_f):
        for s in fn.segments:
            if s.infinite:
                continue

            def gap(x, s=s):
                v = float(s.derivative(x))
                # the edge of an infinite plateau may evaluate to inf or nan
                return (v if math.isfinite(v) else 1e300) - a

            if gap(s.lo) * gap(s.hi) < 0:
                cuts.add(brentq(gap, s.lo, s.hi, xtol=1e-15, rtol=1e-15))
    cuts = sorted(c for c in cuts if x1 <= c <= x2)
    segs = []
    for l, r in zip(cuts, cuts[1:]):
        if r <= l:
            continue
        m = 0.5 * (l + r)
        lv, uv = float(lo_f(m)), float(up_f(m))
        if lv >= a:
            segs.append(lo_f.segment_at(m).restricted(l, r))
        elif uv <= a:
            segs.append(up_f.segment_at(m).restricted(l, r))
        else:
            segs.append(poly_segment(l, r, [a]))
    return PiecewiseFunction(segs)


def _envelope_integral(fn: PiecewiseFunction) -> float:
    if any(s.infinite for s in fn.segments):
        return math.inf
    lo, hi = fn.domain
    return fn.definite_integral(lo, hi)


def _match_integral(env: EnvelopePair, D: float, alpha: float, nonneg: bool) -> PiecewiseFunction:
    """Interpolant between the envelopes whose integral over the interval is ``D``."""
    i_lo = _envelope_integral(env.lower)
    i_hi = _envelope_integral(env.upper)
    D = _clip_to_interval(D, i_lo, i_hi)
    if not nonneg or alpha <= 1:
        if i_hi - i_lo <= 1e-15 * (1 + abs(i_hi)):
            return env.lower
        lam = (i_hi - D) / (i_hi - i_lo)
        return linear_combination([env.lower, env.upper], [lam, 1.0 - lam])
    if D == i_lo:
        return env.lower
    if D == i_hi:
        return env.upper

    def excess(a):
        return _envelope_integral(_acut(env, a)) - D

    x1, x2 = env.lower.domain
    a_hi = max(float(env.lower(x1)), float(env.lower(x2)), 1e-300)
    while excess(a_hi) < 0:
        a_hi *= 2
    a = brentq(excess, 0.0, a_hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return _acut(env, a)


def _lift_basic(x, F, G, M, alpha, nonneg) -> PiecewiseFunction:
    """Basic-class function on the whole line through ``(x_i, G_i)`` with prescribed integrals."""
    segs = [poly_segment(-math.inf, x[0], [G[0]], anchor=x[0])]
    for i in range(len(x) - 1):
        if x[i + 1] == x[i]:
            continue
        env = basic_envelopes(x[i], G[i], x[i + 1], G[i + 1], M, alpha, nonneg)
        piece = _match_integral(env, F[i + 1] - F[i], alpha, nonneg)
        segs.extend(piece.segments)
    segs.append(poly_segment(x[-1], math.inf, [G[-1]], anchor=x[-1]))
    return PiecewiseFunction(segs)


def _basic_through(x, v, M, alpha, nonneg) -> PiecewiseFunction:
    segs = [poly_segment(-math.inf, x[0], [v[0]], anchor=x[0])]
    for i in range(len(x) - 1):
        if x[i + 1] == x[i]:
            continue
        segs.extend(basic_envelopes(x[i], v[i], x[i + 1], v[i + 1], M, alpha, nonneg).lower.segments)
    segs.append(poly_segment(x[-1], math.inf, [v[-1]], anchor=x[-1]))
    return PiecewiseFunction(segs)


def _hl_with_values(d: Dataset, M: float) -> PiecewiseFunction:
    x, f, g, h = d.x, d.f, d.g, d.h
    parts = [PiecewiseFunction([poly_segment(-math.inf, x[0], [g[0], h[0]], anchor=x[0])])]
    for i in range(len(x) - 1):
        if x[i + 1] == x[i]:
            continue
        env = extremal_gradients_smooth((x[i], g[i], h[i]), (x[i + 1], g[i + 1], h[i + 1]),
                                        ClassSpec("hl", M))
        parts.append(_match_integral(env, f[i + 1] - f[i], 0.0, False))
    parts.append(PiecewiseFunction([poly_segment(x[-1], math.inf, [g[-1], h[-1]], anchor=x[-1])]))
    return concatenate(parts).integral(x[0], f[0])


def reconstruct_interpolant(data: Dataset, spec: ClassSpec, feastol: float = 1e-8) -> PiecewiseFunction:
    """Build a function of the class that interpolates ``data`` exactly.

    The result is defined on the whole line: outside the data hull the basic
    function is continued as a constant.  When function values are absent the
    reconstruction takes ``f(x_0) = 0``.
    """
    verdict = check(data, spec, feastol)
    if not verdict.feasible:
        raise InfeasibleError(f"data is not interpolable (max residual {verdict.max_residual:.3g})")
    d = data.sorted()
    x, mu, M = d.x, spec.mu, spec.M
    if spec.order == 0:
        q = _basic_through(x, d.f - mu, M, spec.alpha, spec.nonneg)
        return q.plus_poly([mu]) if mu else q
    if spec.order == 2 and spec.kind == "hl" and d.f is not None and not np.any(np.isnan(d.f)):
        return _hl_with_values(d, M)
    if spec.order == 1:
        q = _lift_basic(x, d.f - mu * x, d.g - mu, M, spec.alpha, spec.nonneg)
        gfun = q.plus_poly([mu]) if mu else q
        return gfun.integral(x[0], d.f[0])
    q = _lift_basic(x, d.g - mu * x, d.h - mu, M, spec.alpha, spec.nonneg)
    hfun = q.plus_poly([mu]) if mu else q
    f0 = 0.0 if d.f is None or np.isnan(d.f[0]) else d.f[0]
    return hfun.integral(x[0], d.g[0]).integral(x[0], f0)
