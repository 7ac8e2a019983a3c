"""Exact interpolation conditions and classical necessary conditions.

All checks run over every ordered pair of points (or over consecutive pairs
when ``pairs="consecutive"``, which is equivalent for one-dimensional data).
A residual is positive when a condition is violated, by that amount.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .classes import ClassSpec, DomainError, beta, tilde_transform

DEGENERATE_TOL = 1e-12


@dataclass
class Dataset:
    """Points ``(x, f, g, h)``; fields not used by a class may be ``None``."""

    x: np.ndarray
    f: Optional[np.ndarray] = None
    g: Optional[np.ndarray] = None
    h: Optional[np.ndarray] = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        for name in ("f", "g", "h"):
            v = getattr(self, name)
            if v is not None:
                v = np.asarray(v, dtype=float).ravel()
                if v.shape != self.x.shape:
                    raise ValueError(f"field {name} has {v.size} entries, expected {self.x.size}")
                setattr(self, name, v)

    def __len__(self) -> int:
        return self.x.size

    @classmethod
    def from_points(cls, points: Iterable) -> "Dataset":
        """Build from dicts with keys x, f, g, h or from ``(x, f, g, h)`` tuples."""
        pts = list(points)
        cols: dict[str, list] = {k: [] for k in "xfgh"}
        for p in pts:
            if isinstance(p, dict):
                row = {k: p.get(k) for k in "xfgh"}
            else:
                row = dict(zip("xfgh", p))
            for k in "xfgh":
                cols[k].append(row.get(k))
        fields = {}
        for k in "fgh":
            vals = cols[k]
            fields[k] = None if all(v is None for v in vals) else [math.nan if v is None else v for v in vals]
        return cls(np.array(cols["x"], dtype=float), **fields)

    def to_points(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            p = {"x": float(self.x[i])}
            for k in "fgh":
                v = getattr(self, k)
                if v is not None:
                    p[k] = float(v[i])
            out.append(p)
        return out

    def sorted(self) -> "Dataset":
        o = np.argsort(self.x, kind="stable")
        return Dataset(self.x[o], *(None if getattr(self, k) is None else getattr(self, k)[o] for k in "fgh"))

    def require(self, *names: str) -> None:
        for n in names:
            v = getattr(self, n)
            if v is None or np.any(np.isnan(v)):
                raise ValueError(f"dataset is missing field {n!r}")


@dataclass
class Violation:
    i: int
    j: int
    tag: str
    residual: float


@dataclass
class FeasibilityVerdict:
    feasible: bool
    max_residual: float
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "feasible": self.feasible,
            "max_residual": self.max_residual,
            "violations": [vars(v) for v in self.violations],
        }


def _pairs(n: int, x: np.ndarray, mode: str):
    if mode == "all":
        I, J = np.nonzero(~np.eye(n, dtype=bool))
    elif mode == "consecutive":
        o = np.argsort(x, kind="stable")
        a, b = o[:-1], o[1:]
        I, J = np.concatenate([a, b]), np.concatenate([b, a])
    else:
        raise ValueError(f"unknown pair mode {mode!r}")
    return I, J


class _Collector:
    def __init__(self):
        self.parts: list[tuple[str, np.ndarray, np.ndarray, np.ndarray]] = []

    def add(self, tag, I, J, r):
        r = np.asarray(r, dtype=float)
        if r.size:
            self.parts.append((tag, np.asarray(I), np.asarray(J), np.broadcast_to(r, np.shape(I)).astype(float)))

    def verdict(self, feastol: float) -> FeasibilityVerdict:
        worst = 0.0
        viol = []
        for tag, I, J, r in self.parts:
            r = np.where(np.isnan(r), np.inf, r)
            if r.size:
                worst = max(worst, float(np.max(r)))
            for k in np.nonzero(r > feastol)[0]:
                viol.append(Violation(int(I[k]), int(J[k]), tag, float(r[k])))
        viol.sort(key=lambda v: -v.residual)
        return FeasibilityVerdict(worst <= feastol, worst, viol)

    def residual_vector(self) -> np.ndarray:
        if not self.parts:
            return np.zeros(0)
        return np.concatenate([r for _, _, _, r in self.parts])


def _check_sign(v: np.ndarray, what: str):
    if np.any(v < 0):
        raise DomainError(f"negative {what} for a sign-constrained class")


def _basic_residuals(col: _Collector, x, v, M, alpha, nonneg, I, J):
    """Conditions for the basic class on data ``(x_i, v_i)``."""
    dx = np.abs(x[J] - x[I])
    if not nonneg:
        col.add("lipschitz", I, J, v[I] - v[J] - M * dx)
        return
    _check_sign(v, "value")
    if alpha >= 1:
        if np.all(v == 0):
            return
        if np.any(v == 0):
            zero = v[I] == 0
            col.add("positivity", I[zero], J[zero], v[J][zero])
            keep = (v[I] > 0) & (v[J] > 0)
            I, J, dx = I[keep], J[keep], dx[keep]
    t = np.zeros_like(v)
    pos = v > 0
    t[pos] = tilde_transform(v[pos], alpha)
    col.add("lipschitz", I, J, t[I] - t[J] - M * dx)


def lifted_lower_bounds(dx, Gi, Gj, M, alpha, nonneg):
    """Lower bounds on ``F_j - F_i`` implied by derivative data ``G_i, G_j``.

    Returns ``[(tag, rhs, active)]``; a bound only applies where ``active``.
    Derivative values are assumed valid for the class (signs already checked).
    """
    dx, Gi, Gj = np.broadcast_arrays(*(np.atleast_1d(np.asarray(a, dtype=float)) for a in (dx, Gi, Gj)))
    if not nonneg:
        rhs = (Gi**2 + Gj**2 - 0.5 * (Gi + Gj - M * dx) ** 2) / (2 * M)
        return [("curvature", rhs, np.ones(rhs.shape, dtype=bool))]
    if alpha == 1:
        rhs = (Gi + Gj) / M - 2.0 / M * np.sqrt(Gi * Gj) * np.exp(-M * dx / 2)
        return [("curvature", rhs, np.ones(rhs.shape, dtype=bool))]
    b = beta(alpha)
    s = 1.0 if alpha < 1 else -1.0
    ti = _tilde_or_zero(Gi, alpha)
    tj = _tilde_or_zero(Gj, alpha)
    base = ti + tj - s * M * dx
    with np.errstate(all="ignore"):
        if b == -1:
            rhs2 = np.log(base**2 / (4 * ti * tj)) / M
        else:
            rhs2 = s / (M * (b + 1)) * (ti ** (b + 1) + tj ** (b + 1) - 2.0 ** (-b) * base ** (b + 1))
    out = [("curvature", rhs2, base > 0 if alpha > 1 else base >= 0)]
    if alpha < 1:
        rhs3 = (ti ** (b + 1) + tj ** (b + 1)) / (M * (b + 1))
        out.append(("plateau", rhs3, base <= 0))
    return out


def _tilde_or_zero(G, alpha):
    t = np.zeros_like(G)
    pos = G > 0
    if np.any(pos):
        t[pos] = tilde_transform(G[pos], alpha)
    return t


def _lifted_residuals(col: _Collector, x, F, G, M, alpha, nonneg, I, J):
    """Conditions for the once-integrated class on data ``(x_i, F_i, F'_i = G_i)``."""
    dx = x[J] - x[I]
    dF = F[J] - F[I]
    if nonneg:
        _check_sign(G, "derivative")
        if alpha != 1:
            if np.all(G == 0):
                col.add("degenerate", I, J, np.abs(dF))
                return
            if alpha > 1 and np.any(G == 0):
                zero = G[I] == 0
                col.add("positivity", I[zero], J[zero], G[J][zero])
                keep = (G[I] > 0) & (G[J] > 0)
                I, J, dx, dF = I[keep], J[keep], dx[keep], dF[keep]
            t = _tilde_or_zero(G, alpha)
            col.add("lipschitz", I, J, np.abs(t[I] - t[J]) - M * np.abs(dx))
    for tag, rhs, active in lifted_lower_bounds(dx, G[I], G[J], M, alpha, nonneg):
        col.add(tag, I[active], J[active], (rhs - dF)[active])


def _shifted(spec: ClassSpec, x, F, G):
    if spec.mu == 0:
        return F, G
    return F - spec.mu * x, G - spec.mu


def check_basic(data: Dataset, spec: ClassSpec, feastol: float = 1e-9, pairs: str = "all") -> FeasibilityVerdict:
    """Interpolation by the basic class; values are taken from ``data.f``."""
    data.require("f")
    col = _Collector()
    I, J = _pairs(len(data), data.x, pairs)
    _basic_residuals(col, data.x, data.f - spec.mu, spec.M, spec.alpha, spec.nonneg, I, J)
    return col.verdict(feastol)


def check_first_order(data: Dataset, spec: ClassSpec, feastol: float = 1e-9, pairs: str = "all") -> FeasibilityVerdict:
    """Interpolation of ``(x, f, g)`` by a once-integrated class."""
    data.require("f", "g")
    col = _Collector()
    I, J = _pairs(len(data), data.x, pairs)
    F, G = _shifted(spec, data.x, data.f, data.g)
    _lifted_residuals(col, data.x, F, G, spec.M, spec.alpha, spec.nonneg, I, J)
    return col.verdict(feastol)


def check_second_order_no_values(data: Dataset, spec: ClassSpec, feastol: float = 1e-9,
                                 pairs: str = "all") -> FeasibilityVerdict:
    """Interpolation of ``(x, g, h)`` by a twice-integrated class, values free."""
    data.require("g", "h")
    col = _Collector()
    I, J = _pairs(len(data), data.x, pairs)
    F, G = _shifted(spec, data.x, data.g, data.h)
    _lifted_residuals(col, data.x, F, G, spec.M, spec.alpha, spec.nonneg, I, J)
    return col.verdict(feastol)


def hl_pair_terms(x, f, g, h, I, J):
    """Differences used by the Hessian-Lipschitz conditions with values."""
    dx = x[J] - x[I]
    dh = h[J] - h[I]
    Tg = g[J] - g[I] - h[I] * dx
    Tf = f[J] - f[I] - g[I] * dx - 0.5 * h[I] * dx**2
    return dx, dh, Tg, Tf


def _hl_value_residuals(col: _Collector, x, f, g, h, M, I, J, debug=False):
    dx, dh, Tg, Tf = hl_pair_terms(x, f, g, h, I, J)
    adx = np.abs(dx)
    col.add("hessian", I, J, np.abs(dh) - M * adx)
    D = dh + M * adx
    reg = D > DEGENERATE_TOL
    with np.errstate(all="ignore"):
        lower = -M / 6 * adx**3 + (Tg + M / 2 * dx * adx) ** 2 / (2 * D) + D**3 / (96 * M**2)
    col.add("values", I[reg], J[reg], (lower - Tf)[reg])
    deg = ~reg
    col.add("degenerate_gradient", I[deg], J[deg], np.abs(Tg + M / 2 * dx * adx)[deg])
    col.add("degenerate_value", I[deg], J[deg], np.abs(Tf + M / 6 * adx**3)[deg])
    if debug:
        _debug_redundancy(x, f, g, h, M, I, J, dx, dh, Tg, Tf)


def _debug_redundancy(x, f, g, h, M, I, J, dx, dh, Tg, Tf, tol=1e-7):
    """Check that the implied conditions hold whenever the exact ones do."""
    adx = np.abs(dx)
    D = dh + M * adx
    ok = (np.abs(dh) <= M * adx + tol)
    with np.errstate(all="ignore"):
        lower = -M / 6 * adx**3 + (Tg + M / 2 * dx * adx) ** 2 / (2 * D) + D**3 / (96 * M**2)
        ok &= (D <= DEGENERATE_TOL) | (Tf >= lower - tol)
        Dm = M * adx - dh
        upper = M / 6 * adx**3 - (Tg - M / 2 * dx * adx) ** 2 / (2 * Dm) - Dm**3 / (96 * M**2)
        gap = M * dx**2 / 2 - (dh + M * dx) ** 2 / (4 * M)
    reg = ok & (Dm > DEGENERATE_TOL)
    assert np.all(Tf[reg] <= upper[reg] + tol), "upper value bound failed on a feasible pair"
    fwd = ok & (dx > 0)
    assert np.all(Tg[fwd] + gap[fwd] >= -tol), "gradient condition failed on a feasible pair"


def check_second_order_with_values(data: Dataset, spec: ClassSpec, feastol: float = 1e-9,
                                   pairs: str = "all", debug: bool = False) -> FeasibilityVerdict:
    """Interpolation of ``(x, f, g, h)`` by Hessian-Lipschitz functions."""
    if spec.kind != "hl":
        raise ValueError("interpolation with values is only available for the Hessian-Lipschitz class")
    data.require("f", "g", "h")
    col = _Collector()
    I, J = _pairs(len(data), data.x, pairs)
    _hl_value_residuals(col, data.x, data.f, data.g, data.h, spec.M, I, J, debug)
    return col.verdict(feastol)


def check(data: Dataset, spec: ClassSpec, feastol: float = 1e-9, pairs: str = "all") -> FeasibilityVerdict:
    """Dispatch on the class order and on which fields are present."""
    for name in ("x", "f", "g", "h"):
        v = getattr(data, name)
        if v is not None and np.any(np.isinf(v)):
            raise ValueError(f"dataset field {name!r} has infinite entries")
    if spec.order == 0:
        return check_basic(data, spec, feastol, pairs)
    if spec.order == 1:
        return check_first_order(data, spec, feastol, pairs)
    if spec.kind == "hl" and data.f is not None and not np.any(np.isnan(data.f)):
        return check_second_order_with_values(data, spec, feastol, pairs)
    return check_second_order_no_values(data, spec, feastol, pairs)


CLASSICAL = ("qsc_existing", "qsc_improved", "cubic_bound", "cubic_improved")


def classical_necessary(data: Dataset, spec: ClassSpec, which: str | None = None,
                        feastol: float = 1e-9) -> FeasibilityVerdict:
    """Pairwise necessary conditions that predate the exact characterization."""
    if which is None:
        which = "qsc_existing" if spec.alpha == 1 else "cubic_bound"
    col = _Collector()
    n = len(data)
    I, J = _pairs(n, data.x, "all")
    M = spec.M
    x = data.x
    dx = x[J] - x[I]
    adx = np.abs(dx)
    if which in ("qsc_existing", "qsc_improved"):
        data.require("g", "h")
        g, h = data.g, data.h
        _check_sign(h, "second derivative")
        lhs = g[J] - g[I] - h[I] * dx
        rhs = h[I] / M * (np.exp(M * adx) - M * adx - 1)
        if which == "qsc_improved":
            rhs = rhs - (np.sqrt(h[J]) - np.sqrt(h[I] * np.exp(M * dx))) ** 2 / M
        col.add(which, I, J, lhs - rhs)
    elif which in ("cubic_bound", "cubic_improved"):
        data.require("f", "g", "h")
        dx, dh, Tg, Tf = hl_pair_terms(x, data.f, data.g, data.h, I, J)
        bound = M / 6 * adx**3
        if which == "cubic_improved":
            inner = np.maximum(np.abs(Tg - M / 2 * adx * dx) / M, 0.0)
            bound = bound - M / 3 * inner**1.5
        col.add(which, I, J, np.abs(Tf) - bound)
    else:
        raise ValueError(f"unknown classical condition {which!r}; choose from {CLASSICAL}")
    return col.verdict(feastol)


def check_residual_vector(data: Dataset, spec: ClassSpec, pairs: str = "all") -> np.ndarray:
    """All signed residuals of :func:`check`, concatenated (for diagnostics)."""
    col = _Collector()
    I, J = _pairs(len(data), data.x, pairs)
    if spec.order == 0:
        _basic_residuals(col, data.x, data.f - spec.mu, spec.M, spec.alpha, spec.nonneg, I, J)
    elif spec.order == 1:
        F, G = _shifted(spec, data.x, data.f, data.g)
        _lifted_residuals(col, data.x, F, G, spec.M, spec.alpha, spec.nonneg, I, J)
    elif spec.kind == "hl" and data.f is not None:
        _hl_value_residuals(col, data.x, data.f, data.g, data.h, spec.M, I, J)
    else:
        F, G = _shifted(spec, data.x, data.g, data.h)
        _lifted_residuals(col, data.x, F, G, spec.M, spec.alpha, spec.nonneg, I, J)
    return col.residual_vector()
