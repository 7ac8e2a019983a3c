"""Closed-form piecewise functions.

Each segment is a polynomial in ``t = x - anchor`` plus a short sum of
elementary terms of an affine argument ``u = a + b t``:

* ``power``: ``c * u**nu``
* ``exp``:   ``c * exp(u)``
* ``log``:   ``c * log(u)``
* ``xlogx``: ``c * u * log(u)``

That family is closed under the integrations needed to lift extremal
envelopes from the basic function up to the function itself.  A segment may
also be the constant ``+inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .classes import DomainError

TERM_KINDS = ("power", "exp", "log", "xlogx")


@dataclass(frozen=True)
class Term:
    kind: str
    c: float
    a: float
    b: float
    nu: float = 1.0

    def derivative(self, t, k: int):
        u = self.a + self.b * t
        c, b, nu = self.c, self.b, self.nu
        if self.kind == "power":
            coef = c * b**k
            for i in range(k):
                coef *= nu - i
            if coef == 0:
                return np.zeros_like(u)
            return coef * np.power(u, nu - k)
        if self.kind == "exp":
            return c * b**k * np.exp(u)
        if self.kind == "log":
            if k == 0:
                return c * np.log(u)
            return c * b**k * (-1) ** (k - 1) * math.factorial(k - 1) / u**k
        if self.kind == "xlogx":
            if k == 0:
                return c * u * np.log(u)
            if k == 1:
                return c * b * (np.log(u) + 1)
            return c * b**k * (-1) ** k * math.factorial(k - 2) / u ** (k - 1)
        raise ValueError(self.kind)

    def shifted(self, delta: float) -> "Term":
        """Same term expressed in ``t' = t - delta``."""
        return replace(self, a=self.a + self.b * delta)

    def antiderivative(self):
        """Return ``(terms, linear_poly)`` whose sum vanishes at ``t = 0``."""
        c, a, b, nu = self.c, self.a, self.b, self.nu
        if b == 0:
            v = float(self.derivative(0.0, 0))
            return (), (0.0, v)
        if self.kind == "power":
            if nu == -1:
                k = c / b
                return (Term("log", k, a, b),), (-k * math.log(a),)
            k = c / (b * (nu + 1))
            return (Term("power", k, a, b, nu + 1),), (-k * a ** (nu + 1),)
        if self.kind == "exp":
            k = c / b
            return (Term("exp", k, a, b),), (-k * math.exp(a),)
        if self.kind == "log":
            k = c / b
            # c log u integrates to (c/b)(u log u - u)
            const = -k * (a * math.log(a) - a) if a > 0 else 0.0
            return (Term("xlogx", k, a, b),), (const - k * a, -k * b)
        raise DomainError(f"cannot integrate a {self.kind} term")


@dataclass(frozen=True)
class Segment:
    lo: float
    hi: float
    anchor: float
    poly: tuple = (0.0,)
    terms: tuple = ()
    infinite: bool = False

    def derivative(self, x, k: int = 0):
        x = np.asarray(x, dtype=float)
        if self.infinite:
            return np.full(x.shape, np.inf if k == 0 else np.nan)
        t = x - self.anchor
        p = Polynomial(self.poly)
        out = p.deriv(k)(t) if k else p(t)
        out = np.asarray(out, dtype=float) + np.zeros_like(t)
        for term in self.terms:
            out = out + term.derivative(t, k)
        return out

    def reanchored(self, anchor: float) -> "Segment":
        if self.infinite or anchor == self.anchor:
            return replace(self, anchor=anchor)
        d = anchor - self.anchor
        p = Polynomial(self.poly)(Polynomial([d, 1.0]))
        return replace(self, anchor=anchor, poly=tuple(p.coef),
                       terms=tuple(t.shifted(d) for t in self.terms))

    def restricted(self, lo: float, hi: float) -> "Segment":
        return replace(self, lo=lo, hi=hi)

    def scaled(self, w: float) -> "Segment":
        if self.infinite:
            if w <= 0:
                raise DomainError("cannot scale an infinite segment by a nonpositive weight")
            return self
        return replace(self, poly=tuple(w * c for c in self.poly),
                       terms=tuple(replace(t, c=w * t.c) for t in self.terms))

    def antiderivative(self) -> "Segment":
        """Antiderivative vanishing at the anchor."""
        if self.infinite:
            raise DomainError("cannot integrate an infinite segment")
        coef = np.concatenate([[0.0], np.asarray(self.poly, dtype=float)
                               / np.arange(1, len(self.poly) + 1)])
        terms = []
        for term in self.terms:
            new_terms, lin = term.antiderivative()
            terms.extend(new_terms)
            lin = np.asarray(lin, dtype=float)
            if len(lin) > len(coef):
                coef = np.pad(coef, (0, len(lin) - len(coef)))
            coef[: len(lin)] += lin
        return replace(self, poly=tuple(coef), terms=tuple(terms))

    def to_json(self) -> dict:
        return {
            "lo": _num(self.lo), "hi": _num(self.hi), "anchor": _num(self.anchor),
            "infinite": self.infinite, "poly": [float(c) for c in self.poly],
            "terms": [{"kind": t.kind, "c": t.c, "a": t.a, "b": t.b, "nu": t.nu} for t in self.terms],
        }

    @classmethod
    def from_json(cls, d: dict) -> "Segment":
        return cls(_unnum(d["lo"]), _unnum(d["hi"]), _unnum(d["anchor"]),
                   tuple(d.get("poly", [0.0])),
                   tuple(Term(**t) for t in d.get("terms", [])),
                   bool(d.get("infinite", False)))


def _num(v: float):
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return float(v)


def _unnum(v) -> float:
    return float(v)


def poly_segment(lo: float, hi: float, coeffs: Sequence[float], anchor: float | None = None) -> Segment:
    """Polynomial piece; ``coeffs`` are ascending powers of ``x - anchor``."""
    if anchor is None:
        anchor = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
    return Segment(lo, hi, anchor, tuple(float(c) for c in coeffs))


def term_segment(lo: float, hi: float, term: Term, poly: Sequence[float] = (0.0,),
                 anchor: float | None = None) -> Segment:
    if anchor is None:
        anchor = lo if math.isfinite(lo) else hi
    return Segment(lo, hi, anchor, tuple(float(c) for c in poly), (term,))


def infinite_segment(lo: float, hi: float) -> Segment:
    return Segment(lo, hi, lo, (0.0,), (), True)


class PiecewiseFunction:
    """Contiguous sequence of closed-form segments."""

    def __init__(self, segments: Sequence[Segment]):
        segs = [s for s in segments if s.hi > s.lo]
        if not segs:
            raise ValueError("a piecewise function needs at least one segment")
        for left, right in zip(segs, segs[1:]):
            if not math.isclose(left.hi, right.lo, rel_tol=0, abs_tol=1e-12 * max(1.0, abs(left.hi))):
                raise ValueError("segments must be contiguous")
        self.segments = segs
        self._los = np.array([s.lo for s in segs])

    @property
    def domain(self) -> tuple[float, float]:
        return self.segments[0].lo, self.segments[-1].hi

    @property
    def breakpoints(self) -> list[float]:
        return [s.lo for s in self.segments[1:]]

    def __call__(self, x):
        return self.derivative(x, 0)

    def derivative(self, x, k: int = 0):
        xa = np.asarray(x, dtype=float)
        lo, hi = self.domain
        if np.any((xa < lo) | (xa > hi)):
            raise DomainError(f"evaluation outside the domain [{lo}, {hi}]")
        idx = np.clip(np.searchsorted(self._los, xa, side="right") - 1, 0, len(self.segments) - 1)
        out = np.empty(xa.shape, dtype=float)
        with np.errstate(all="ignore"):
            for i in np.unique(idx):
                m = idx == i
                out[m] = self.segments[i].derivative(xa[m], k)
        return float(out) if out.ndim == 0 else out

    def segment_at(self, x: float) -> Segment:
        i = int(np.clip(np.searchsorted(self._los, x, side="right") - 1, 0, len(self.segments) - 1))
        return self.segments[i]

    def integral(self, x0: float, value: float = 0.0) -> "PiecewiseFunction":
        """Antiderivative ``F`` with ``F(x0) = value``."""
        anti = [s.reanchored(s.lo if math.isfinite(s.lo) else s.hi).antiderivative()
                for s in self.segments]
        with np.errstate(all="ignore"):
            for i in range(1, len(anti)):
                b = anti[i].lo
                jump = float(anti[i - 1].derivative(b)) - float(anti[i].derivative(b))
                anti[i] = _add_constant(anti[i], jump)
            F = PiecewiseFunction(anti)
            shift = value - float(F.derivative(x0))
        return PiecewiseFunction([_add_constant(s, shift) for s in anti])

    def definite_integral(self, lo: float, hi: float) -> float:
        F = self.integral(lo, 0.0)
        return float(F(hi))

    def restrict(self, lo: float, hi: float) -> "PiecewiseFunction":
        segs = [s.restricted(max(s.lo, lo), min(s.hi, hi)) for s in self.segments
                if s.hi > lo and s.lo < hi]
        return PiecewiseFunction(segs)

    def scaled(self, w: float) -> "PiecewiseFunction":
        return PiecewiseFunction([s.scaled(w) for s in self.segments])

    def plus_poly(self, coeffs: Sequence[float], anchor: float = 0.0) -> "PiecewiseFunction":
        """Add a polynomial in ``x - anchor`` to every segment."""
        out = []
        for s in self.segments:
            if s.infinite:
                out.append(s)
                continue
            p = Polynomial(coeffs)(Polynomial([s.anchor - anchor, 1.0]))
            q = Polynomial(s.poly) + p
            out.append(replace(s, poly=tuple(q.coef)))
        return PiecewiseFunction(out)

    def to_json(self) -> dict:
        lo, hi = self.domain
        return {"domain": [_num(lo), _num(hi)], "segments": [s.to_json() for s in self.segments]}

    @classmethod
    def from_json(cls, d: dict) -> "PiecewiseFunction":
        return cls([Segment.from_json(s) for s in d["segments"]])

    def __repr__(self) -> str:
        lo, hi = self.domain
        return f"PiecewiseFunction(domain=[{lo}, {hi}], segments={len(self.segments)})"


def _add_constant(s: Segment, c: float) -> Segment:
    if c == 0 or s.infinite:
        return s
    poly = list(s.poly)
    poly[0] += c
    return replace(s, poly=tuple(poly))


def concatenate(parts: Sequence[PiecewiseFunction]) -> PiecewiseFunction:
    segs: list[Segment] = []
    for p in parts:
        segs.extend(p.segments)
    return PiecewiseFunction(segs)


def linear_combination(fs: Sequence[PiecewiseFunction], ws: Sequence[float]) -> PiecewiseFunction:
    """Pointwise ``sum_i ws[i] * fs[i]`` on the common domain."""
    lo = max(f.domain[0] for f in fs)
    hi = min(f.domain[1] for f in fs)
    cuts = sorted({lo, hi, *(b for f in fs for b in f.breakpoints if lo < b < hi)})
    segs = []
    for l, r in zip(cuts, cuts[1:]):
        anchor = l if math.isfinite(l) else r
        mid = _midpoint(l, r)
        parts = [f.segment_at(mid) for f, w in zip(fs, ws) if w != 0]
        weights = [w for w in ws if w != 0]
        if any(p.infinite for p in parts):
            segs.append(infinite_segment(l, r))
            continue
        poly = Polynomial([0.0])
        terms: list[Term] = []
        for p, w in zip(parts, weights):
            q = p.reanchored(anchor).scaled(w)
            poly = poly + Polynomial(q.poly)
            terms.extend(q.terms)
        segs.append(Segment(l, r, anchor, tuple(poly.coef), tuple(terms)))
    return PiecewiseFunction(segs)


def _midpoint(l: float, r: float) -> float:
    if math.isinf(l) and math.isinf(r):
        return 0.0
    if math.isinf(l):
        return r - 1.0
    if math.isinf(r):
        return l + 1.0
    return 0.5 * (l + r)
