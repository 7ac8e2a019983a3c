"""Second-order methods, trajectories and closed-form worst-case bounds."""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .classes import DomainError

METHOD_KINDS = ("newton", "gradient", "dnm", "cnm", "gnm1", "gnm2", "adnm")


class MethodError(ArithmeticError):
    """A step is undefined at the current point (zero or negative curvature)."""


@dataclass(frozen=True)
class MethodSpec:
    """A one-dimensional second-order method.

    ``M`` is the regularization constant (cnm, gnm1, gnm2, adnm), ``step`` the
    gradient step size, ``gamma`` the Newton damping (a number or one value per
    iteration) and ``alpha`` the cubic-regularization relaxation, which uses
    ``M / alpha`` in the model.
    """

    kind: str
    M: Optional[float] = None
    step: Optional[float] = None
    gamma: Optional[object] = None
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise ValueError(f"unknown method {self.kind!r}")
        if self.kind in ("cnm", "gnm1", "gnm2", "adnm") and not (self.M and self.M > 0):
            raise ValueError(f"method {self.kind} needs a positive M")
        if self.kind == "gradient" and not (self.step and self.step > 0):
            raise ValueError("gradient method needs a positive step")
        if self.kind == "dnm" and self.gamma is None:
            raise ValueError("damped Newton needs gamma")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")

    def damping(self, k: int) -> float:
        g = self.gamma
        if isinstance(g, (list, tuple)):
            return float(g[min(k, len(g) - 1)])
        return float(g)

    def to_json(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if v is not None}
        if isinstance(d.get("gamma"), tuple):
            d["gamma"] = list(d["gamma"])
        return d

    @classmethod
    def from_json(cls, d: dict) -> "MethodSpec":
        d = dict(d)
        if isinstance(d.get("gamma"), list):
            d["gamma"] = tuple(d["gamma"])
        return cls(**d)


def newton(): return MethodSpec("newton")
def gradient(step: float): return MethodSpec("gradient", step=step)
def damped_newton(gamma): return MethodSpec("dnm", gamma=gamma)
def cubic_newton(M: float, alpha: float = 1.0): return MethodSpec("cnm", M=M, alpha=alpha)
def grad_reg_newton1(M: float): return MethodSpec("gnm1", M=M)
def grad_reg_newton2(M: float): return MethodSpec("gnm2", M=M)
def adaptive_damped_newton(M: float): return MethodSpec("adnm", M=M)


def cubic_model(d, g: float, h: float, M: float):
    return g * d + 0.5 * h * d * d + M / 6 * np.abs(d) ** 3


def cubic_minimizers(g: float, h: float, M: float) -> list[float]:
    """Global minimizers of ``g d + h d^2/2 + M |d|^3 / 6``, sorted."""
    cands = []
    disc = h * h - 2 * M * g  # stationary points with d > 0
    if disc >= 0:
        r = math.sqrt(disc)
        d = (-h + r) / M if h < 0 else (-2 * g / (h + r) if h + r > 0 else 0.0)
        if d > 0:
            cands.append(d)
    disc = h * h + 2 * M * g  # stationary points with d < 0
    if disc >= 0:
        r = math.sqrt(disc)
        d = (h - r) / M if h < 0 else (-2 * g / (h + r) if h + r > 0 else 0.0)
        if d < 0:
            cands.append(d)
    if g == 0 and h >= 0:
        cands.append(0.0)
    if not cands:
        return [0.0]
    vals = [cubic_model(d, g, h, M) for d in cands]
    best = min(vals)
    tol = 1e-14 * max(1.0, abs(best))
    return sorted(d for d, v in zip(cands, vals) if v <= best + tol)


def step_from_derivatives(method: MethodSpec, x: float, g: float, h: float, k: int = 0) -> float:
    """Next iterate from the current point and its first two derivatives."""
    kind = method.kind
    if kind == "gradient":
        return x - method.step * g
    if kind == "cnm":
        # ties between global minimizers go to the leftmost one
        return x + cubic_minimizers(g, h, method.M / method.alpha)[0]
    if kind == "newton":
        den = h
    elif kind == "dnm":
        if h == 0:
            raise MethodError("zero curvature")
        return x - method.damping(k) * g / h
    elif kind == "gnm1":
        den = h + method.M * abs(g)
    elif kind == "gnm2":
        den = h + math.sqrt(method.M / 2 * abs(g))
    elif kind == "adnm":
        if h <= 0:
            raise MethodError("adaptive damping needs positive curvature")
        gamma = 1.0 / (1.0 + method.M * math.sqrt(g * g / h))
        return x - gamma * g / h
    else:
        raise ValueError(kind)
    if den == 0:
        if g == 0:
            return x
        raise MethodError("zero denominator in the step")
    return x - g / den


def step(method: MethodSpec, f, x: float, k: int = 0) -> float:
    return step_from_derivatives(method, x, float(f.derivative(x, 1)), float(f.derivative(x, 2)), k)


CSV_COLUMNS = ("k", "x", "f", "g", "h", "abs_g", "lambda", "eta", "dist")


@dataclass
class Trajectory:
    x: np.ndarray
    f: np.ndarray
    g: np.ndarray
    h: np.ndarray
    M: Optional[float] = None
    xstar: Optional[float] = None
    meta: dict = field(default_factory=dict)

    @property
    def abs_g(self):
        return np.abs(self.g)

    @property
    def newton_decrement(self):
        with np.errstate(all="ignore"):
            return np.where(self.h > 0, np.abs(self.g) / np.sqrt(np.abs(self.h)), np.nan)

    @property
    def eta(self):
        if self.M is None:
            return np.full(self.x.shape, np.nan)
        with np.errstate(all="ignore"):
            return np.where(self.h > 0, self.M * np.abs(self.g) / self.h, np.nan)

    @property
    def dist(self):
        if self.xstar is None:
            return np.full(self.x.shape, np.nan)
        return np.abs(self.x - self.xstar)

    def rows(self) -> list[list]:
        cols = [self.x, self.f, self.g, self.h, self.abs_g, self.newton_decrement, self.eta, self.dist]
        return [[k] + [float(c[k]) for c in cols] for k in range(self.x.size)]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            write_rows(fh, CSV_COLUMNS, self.rows())


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(v)
    if isinstance(v, str):
        return v
    if v is None:
        return ""
    return f"{float(v):.12g}"


def write_rows(fh, header: Sequence[str], rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def run(method: MethodSpec, f, x0: float, N: int, xstar: float | None = None,
        M: float | None = None) -> Trajectory:
    """Apply ``N`` steps of ``method`` to ``f`` starting at ``x0``."""
    xs = [float(x0)]
    for k in range(N):
        xs.append(step(method, f, xs[-1], k))
    x = np.array(xs)
    return Trajectory(x, np.asarray(f(x), dtype=float), np.asarray(f.derivative(x, 1), dtype=float),
                      np.asarray(f.derivative(x, 2), dtype=float),
                      M if M is not None else method.M, xstar)


# ---------------------------------------------------------------- closed-form bounds

def _need(cond: bool, msg: str):
    if not cond:
        raise DomainError(msg)


def cnm_descent_old(g_next: float, h_next: float, M: float) -> float:
    """Classical lower bound on ``f_k - f_{k+1}`` for cubic Newton."""
    return M / 12 * max(math.sqrt(abs(g_next) / M), -2.0 / 3.0 * h_next / M) ** 3


def cnm_descent_improved(g_next: float, M: float) -> float:
    """Sharper lower bound on ``f_k - f_{k+1}`` in terms of the new gradient only."""
    return 5 * M / 12 * (abs(g_next) / M) ** 1.5


def cnm_sublinear_old(gap: float, N: int, M: float) -> float:
    _need(N >= 1 and gap >= 0, "needs N >= 1 and a nonnegative gap")
    return 4 * M ** (1 / 3) * (3 * gap / (2 * N)) ** (2 / 3)


def cnm_sublinear_new(gap: float, N: int, M: float) -> float:
    return cnm_sublinear_old(gap, N, M) / 5 ** (2 / 3)


def cnm_one_step(gap: float, M: float) -> float:
    """Largest ``|g_1|`` after one cubic Newton step with ``f_0 - f_1 <= gap``."""
    return M * (12 * gap / (5 * M)) ** (2 / 3)


def cnm_hessian_measure(h_next: float, M: float) -> float:
    """Lower bound ``-2 h_{k+1} / (3M)`` on ``sqrt(|g_{k+1}| / M)``."""
    return -2.0 * h_next / (3.0 * M)


def gnm2_local(g: float, M: float, mu: float) -> float:
    a = abs(g)
    return M / (2 * mu**2) * a * a + math.sqrt(M / 2) / mu * a**1.5


def newton_local_hl(r: float, M: float, mu: float) -> float:
    """Distance bound after one Newton step near a minimizer with curvature mu."""
    q = M / mu * r
    _need(0 <= q <= 2 / 3, "needs (M/mu) r <= 2/3")
    return q * r / (2 * (1 - q))


def gm_local_ratio(r: float, M: float, mu: float, L: float, step: float) -> float:
    """Contraction factor of the gradient method at distance ``r``."""
    _need(r < 2 * mu / M, "needs r < 2 mu / M")
    return max(1 - step * (mu - M / 2 * r), step * (L + M / 2 * r) - 1)


def gm_local(r: float, M: float, mu: float, L: float, step: float) -> float:
    return gm_local_ratio(r, M, mu, L, step) * r


def sc_newton(lam: float) -> float:
    """Exact one-step Newton decrement bound on self-concordant functions."""
    _need(0 <= lam <= 1, "needs 0 <= lambda <= 1")
    return 4 - lam**2 - 4 * math.sqrt(1 - lam**2)


def sc_newton_classical(lam: float) -> float:
    _need(0 <= lam < 1, "needs 0 <= lambda < 1")
    return (lam / (1 - lam)) ** 2


def dnm_sc_max_gamma(lam: float) -> float:
    if lam == 0:
        return 1.0
    return 2 * (math.sqrt(1 + lam**3) - 1) / lam**3


def dnm_sc(lam: float, gamma: float) -> float:
    _need(0 <= lam and 0 < gamma <= dnm_sc_max_gamma(lam) * (1 + 1e-12), "gamma too large for this decrement")
    return lam - gamma * lam + gamma * lam**2


def gnm1_qsc(eta: float) -> float:
    _need(eta >= 0, "needs eta >= 0")
    return math.exp(eta / (eta + 1)) * (eta - 1) + 1


def gnm1_qsc_old(eta: float) -> float:
    _need(eta >= 0, "needs eta >= 0")
    return math.exp(eta) * (math.exp(eta) + eta**2 - eta - 1)


def qsc_newton(g: float, M: float, mu: float) -> float:
    """Bound on ``(M/mu)|f'(x_+)|`` for Newton on quasi-self-concordant, mu-strongly convex f."""
    s = M / mu * abs(g)
    return math.exp(s) - s - 1


BOUNDS = {
    "cnm_descent_old": cnm_descent_old,
    "cnm_descent_improved": cnm_descent_improved,
    "cnm_sublinear_old": cnm_sublinear_old,
    "cnm_sublinear_new": cnm_sublinear_new,
    "cnm_one_step": cnm_one_step,
    "cnm_hessian_measure": cnm_hessian_measure,
    "gnm2_local": gnm2_local,
    "newton_local_hl": newton_local_hl,
    "gm_local": gm_local,
    "gm_local_ratio": gm_local_ratio,
    "sc_newton": sc_newton,
    "sc_newton_classical": sc_newton_classical,
    "dnm_sc": dnm_sc,
    "gnm1_qsc": gnm1_qsc,
    "gnm1_qsc_old": gnm1_qsc_old,
    "qsc_newton": qsc_newton,
}


def analytic_bound(name: str, **params) -> float:
    """Evaluate a named closed-form bound; raises DomainError outside its validity range."""
    try:
        fn = BOUNDS[name]
    except KeyError:
        raise ValueError(f"unknown bound {name!r}; known: {sorted(BOUNDS)}") from None
    return float(fn(**params))


def compose(fn, x0: float, N: int) -> list[float]:
    """Iterate a scalar bound: ``[x0, fn(x0), fn(fn(x0)), ...]``."""
    out = [x0]
    for _ in range(N):
        out.append(fn(out[-1]))
    return out
