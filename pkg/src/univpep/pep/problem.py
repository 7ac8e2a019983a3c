"""Performance estimation problems and their reduced parameterization.

A problem is reduced to a small vector of free variables.  Translation puts
the first iterate at the origin (or the stationary point at the origin for
distance conditions), reflection fixes the sign of the first gradient, and
class-specific invariances fix the scale: affine changes of variable for
self-concordant functions and ``f -> c f`` for quasi-self-concordant ones.
Explicit methods then determine every iterate from the previous one, so only
derivative data remain free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..classes import ClassSpec
from ..interpolation import Dataset
from ..methods import MethodSpec, cubic_minimizers, step_from_derivatives
from .constraints import class_residuals

MEASURES = ("abs_grad_last", "abs_grad_best", "func_gap_last", "dist_last", "newton_decrement_last", "eta_last")
INITIALS = ("func_gap", "abs_grad", "dist", "newton_decrement", "eta")


class FormulationError(ValueError):
    """The measure, initial condition, method and class do not fit together."""


@dataclass(frozen=True)
class InitialCondition:
    """``kind`` at the first iterate equals ``R`` (``relation="eq"``) or is at most ``R`` (``"le"``).

    ``func_gap`` is always an upper bound: ``f_0 - f_N <= R``, or
    ``f_0 - f_* <= R`` when a stationary point is part of the problem.
    """

    kind: str
    R: float
    relation: str = "eq"

    def __post_init__(self):
        if self.kind not in INITIALS:
            raise ValueError(f"unknown initial condition {self.kind!r}")
        if self.relation not in ("eq", "le"):
            raise ValueError("relation must be 'eq' or 'le'")
        if not self.R > 0:
            raise ValueError("R must be positive")


@dataclass(frozen=True)
class PepProblem:
    cls: ClassSpec
    method: MethodSpec
    N: int
    measure: str
    initial: InitialCondition
    stationarity: bool = False
    hstar: Optional[float] = None  # fixed curvature at the stationary point

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("N must be at least 1")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")

    def to_json(self) -> dict:
        return {
            "class": self.cls.to_json(), "method": self.method.to_json(), "N": self.N,
            "measure": self.measure, "initial": vars(self.initial).copy(),
            "stationarity": self.stationarity, "hstar": self.hstar,
        }

    @classmethod
    def from_json(cls, d: dict) -> "PepProblem":
        ini = d["initial"]
        return cls(ClassSpec.from_json(d["class"]), MethodSpec.from_json(d["method"]), int(d["N"]),
                   d["measure"], InitialCondition(ini["kind"], float(ini["R"]), ini.get("relation", "eq")),
                   bool(d.get("stationarity", False)), d.get("hstar"))


@dataclass
class Variable:
    name: str
    lo: float
    hi: float
    start_lo: float
    start_hi: float


def _scale_invariant(spec: ClassSpec) -> bool:
    # f -> c f keeps the class only when the defining inequality is homogeneous
    return spec.nonneg and spec.alpha == 1 and spec.mu == 0


def _affine_invariant(spec: ClassSpec) -> bool:
    return spec.kind == "sc" or (spec.nonneg and spec.alpha == 1.5 and spec.mu == 0)


class _HTransform:
    """Map an unconstrained-ish solver variable to a second derivative valid for the class."""

    def __init__(self, spec: ClassSpec):
        self.spec = spec
        mu = spec.mu
        if not spec.nonneg:
            self.kind, self.box, self.start = "raw", (-50.0, 50.0), (-3.0, 3.0)
        elif spec.alpha < 1:
            self.kind, self.box, self.start = "shift", (0.0, 1e3), (0.0, 3.0)
        elif spec.alpha == 1.5 and mu == 0:
            # h = t**-2, where t is Lipschitz for self-concordant functions
            self.kind, self.box, self.start = "isqrt", (10 ** -1.5, 1e3), (0.2, 3.0)
        else:
            self.kind, self.box, self.start = "log", (math.log(1e-6), math.log(1e3)), (-3.0, 2.0)
        self.mu = mu

    def __call__(self, v):
        if self.kind == "raw":
            return v
        if self.kind == "shift":
            return self.mu + v
        if self.kind == "isqrt":
            return v ** -2.0
        return self.mu + np.exp(v)

    def inverse(self, h):
        if self.kind == "raw":
            return h
        if self.kind == "shift":
            return h - self.mu
        if self.kind == "isqrt":
            return h ** -0.5
        return math.log(h - self.mu)


@dataclass
class Formulation:
    """Free variables, a decoder to full data, constraints ``<= 0`` and an objective to maximize."""

    problem: PepProblem
    variables: list[Variable]
    values: bool
    notes: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.variables)

    @property
    def bounds(self):
        return [(v.lo, v.hi) for v in self.variables]

    def decode(self, z) -> dict:
        # the optimizer evaluates objective and constraints at the same points
        z = np.asarray(z, dtype=float)
        cache = self.notes.setdefault("_decoded", {})
        key = z.tobytes()
        d = cache.get(key)
        if d is None:
            if len(cache) >= 256:
                cache.clear()
            d = cache[key] = _decode(self, z)
        return d

    def dataset(self, z) -> Dataset:
        d = self.decode(z)
        return Dataset(d["x"], d["f"] if self.values else None, d["g"], d["h"])

    def constraints(self, z) -> np.ndarray:
        d = self.decode(z)
        c = d.get("constraints")
        if c is None:
            p = self.problem
            c = np.concatenate([class_residuals(p.cls, d["x"], d["f"] if self.values else None, d["g"], d["h"]),
                                d["extra"]])
            c.flags.writeable = False
            d["constraints"] = c
        return c

    def objective(self, z) -> float:
        """Smooth surrogate of the measure (monotone in it)."""
        return _surrogate(self.problem, self.decode(z))

    def measure(self, z) -> float:
        return measure_value(self.problem, self.decode(z))


def formulate(problem: PepProblem) -> Formulation:
    """Reduce ``problem`` to free variables; see the module docstring for the normalizations."""
    p, spec, meth = problem, problem.cls, problem.method
    if spec.order != 2:
        raise FormulationError("performance estimation needs a second-order class")
    ini = p.initial
    needs_values = p.measure == "func_gap_last" or ini.kind == "func_gap"
    if needs_values and spec.kind != "hl":
        raise FormulationError("function values are only available for the Hessian-Lipschitz class")
    if p.measure == "dist_last" and not p.stationarity:
        raise FormulationError("a distance measure needs a stationary point")
    if ini.kind == "dist" and not p.stationarity:
        raise FormulationError("a distance initial condition needs a stationary point")
    if p.measure == "func_gap_last" and not p.stationarity:
        raise FormulationError("the function gap measure needs a stationary point")
    positive_h = spec.nonneg or spec.mu > 0
    if (p.measure in ("newton_decrement_last", "eta_last") or ini.kind in ("newton_decrement", "eta")) \
            and not positive_h:
        raise FormulationError("decrement and eta measures need a class with positive curvature")

    ht = _HTransform(spec)
    V: list[Variable] = []

    def var(name, box, start):
        V.append(Variable(name, box[0], box[1], start[0], start[1]))

    gbox, gstart = (-50.0, 50.0), (-3.0, 3.0)
    fbox, fstart = (-50.0, 50.0), (-3.0, 3.0)
    cnm_d = (-10.0, 10.0), (-3.0, 3.0)
    R = ini.R
    plan: dict = {"first": None}

    # first iterate
    if ini.kind == "abs_grad":
        plan["first"] = "abs_grad"
        if ini.relation == "le":
            var("g0", (0.0, R), (0.0, R))
        var("h0", ht.box, ht.start)
    elif ini.kind == "newton_decrement":
        if _affine_invariant(spec):
            plan["first"] = "lambda_fixed_h"
            if ini.relation == "le":
                var("lam0", (0.0, R), (0.0, R))
        else:
            plan["first"] = "lambda_free_h"
            if ini.relation == "le":
                var("lam0", (0.0, R), (0.0, R))
            var("h0", ht.box, ht.start)
    elif ini.kind == "eta":
        if _scale_invariant(spec):
            plan["first"] = "eta_fixed_g"
            if ini.relation == "le":
                var("eta0", (1e-9, R), (0.0, R))
        else:
            plan["first"] = "eta_free_h"
            if ini.relation == "le":
                var("eta0", (1e-9, R), (0.0, R))
            var("h0", ht.box, ht.start)
    else:
        plan["first"] = "free"
        if ini.kind == "dist" and ini.relation == "le":
            var("x0", (0.0, R), (0.0, R))
        if meth.kind == "cnm":
            var("h0", ht.box, ht.start)
            var("d0", *cnm_d)
        else:
            var("g0", gbox, gstart)
            var("h0", ht.box, ht.start)
    for k in range(1, p.N + 1):
        if needs_values:
            var(f"f{k}", fbox, fstart)
        if meth.kind == "cnm" and k < p.N:
            var(f"h{k}", ht.box, ht.start)
            var(f"d{k}", *cnm_d)
        else:
            var(f"g{k}", gbox, gstart)
            var(f"h{k}", ht.box, ht.start)
    if p.stationarity:
        if ini.kind != "dist":
            var("xs", (-20.0, 20.0), (-3.0, 3.0))
        if needs_values:
            var("fs", fbox, fstart)
        if p.hstar is None:
            # the stationary point of interest is a local minimum: h_* >= 0
            if ht.kind == "raw":
                var("hs_raw", (0.0, ht.box[1]), (0.0, ht.start[1]))
            else:
                var("hs_raw", ht.box, ht.start)
    if p.measure == "abs_grad_best":
        var("tau", (0.0, 50.0), (0.0, 1.0))
    form = Formulation(problem, V, needs_values, {"plan": plan["first"], "h": ht})
    form._index = {v.name: i for i, v in enumerate(V)}
    return form


def eta_M(p: PepProblem) -> float:
    """Constant used in ``eta = M |g| / h``: the class constant."""
    return p.cls.M


def _decode(form: Formulation, z: np.ndarray) -> dict:
    p, meth, spec = form.problem, form.problem.method, form.problem.cls
    idx = form._index
    ht: _HTransform = form.notes["h"]
    get = lambda name, default=None: z[idx[name]] if name in idx else default  # noqa: E731
    N = p.N
    x = np.zeros(N + 1)
    g = np.zeros(N + 1)
    h = np.zeros(N + 1)
    f = np.zeros(N + 1)
    extra: list[float] = []
    ini = p.initial
    R = ini.R
    plan = form.notes["plan"]
    Mc = meth.M / meth.alpha if meth.kind == "cnm" else None
    if ini.kind == "dist":
        x[0] = get("x0", R)
    if plan == "abs_grad":
        g[0] = get("g0", R)
        h[0] = ht(get("h0"))
    elif plan == "lambda_fixed_h":
        h[0], g[0] = 1.0, get("lam0", R)
    elif plan == "lambda_free_h":
        h[0] = ht(get("h0"))
        g[0] = get("lam0", R) * math.sqrt(max(h[0], 0.0))
    elif plan == "eta_fixed_g":
        g[0], h[0] = 1.0, eta_M(p) / get("eta0", R)
    elif plan == "eta_free_h":
        h[0] = ht(get("h0"))
        g[0] = get("eta0", R) * h[0] / eta_M(p)
    else:
        h[0] = ht(get("h0"))
        if meth.kind == "cnm":
            d = get("d0")
            g[0] = -h[0] * d - Mc / 2 * d * abs(d)
        else:
            g[0] = get("g0")
    steps = []
    for k in range(N):
        if k > 0:
            h[k] = ht(get(f"h{k}"))
            if meth.kind == "cnm":
                d = get(f"d{k}")
                g[k] = -h[k] * d - Mc / 2 * d * abs(d)
            else:
                g[k] = get(f"g{k}")
        if meth.kind == "cnm":
            if k == 0 and plan != "free":
                d = cubic_minimizers(g[0], h[0], Mc)[0]
            elif k == 0:
                d = get("d0")
            else:
                d = get(f"d{k}")
            steps.append(d)
            extra.append(-(h[k] + Mc / 2 * abs(d)))
            x[k + 1] = x[k] + d
        else:
            x[k + 1] = _safe_step(meth, x[k], g[k], h[k], k)
        if form.values:
            f[k + 1] = get(f"f{k + 1}")
    g[N] = get(f"g{N}")
    h[N] = ht(get(f"h{N}"))
    if p.stationarity:
        xs = 0.0 if ini.kind == "dist" else get("xs")
        hs = p.hstar if p.hstar is not None else ht(get("hs_raw"))
        fs = get("fs", 0.0)
        x = np.append(x, xs)
        g = np.append(g, 0.0)
        h = np.append(h, hs)
        f = np.append(f, fs)
    if ini.kind == "func_gap":
        ref = f[-1]  # f_* with a stationary point, f_N otherwise
        extra.append(f[0] - ref - R)
    tau = get("tau")
    if tau is not None:
        for k in range(1, N + 1):
            extra.append(tau**2 - g[k] ** 2)
    return {"x": x, "f": f, "g": g, "h": h, "extra": np.asarray(extra, dtype=float),
            "steps": steps, "tau": tau}


def _safe_step(meth, x, g, h, k):
    try:
        with np.errstate(all="ignore"):
            return step_from_derivatives(meth, x, g, h, k)
    except (ArithmeticError, ValueError):
        return math.nan


def measure_value(p: PepProblem, d: dict) -> float:
    N = p.N
    g, h, x = d["g"], d["h"], d["x"]
    m = p.measure
    if m == "abs_grad_last":
        return abs(g[N])
    if m == "abs_grad_best":
        return float(np.min(np.abs(g[1:N + 1])))
    if m == "func_gap_last":
        return d["f"][N] - d["f"][-1]
    if m == "dist_last":
        return abs(x[N] - x[-1])
    if m == "newton_decrement_last":
        return abs(g[N]) / math.sqrt(h[N]) if h[N] > 0 else math.inf
    if m == "eta_last":
        return eta_M(p) * abs(g[N]) / h[N] if h[N] > 0 else math.inf
    raise ValueError(m)


def _surrogate(p: PepProblem, d: dict) -> float:
    N = p.N
    g, h, x = d["g"], d["h"], d["x"]
    m = p.measure
    if m == "abs_grad_last":
        return g[N] ** 2
    if m == "abs_grad_best":
        return d["tau"] ** 2
    if m == "func_gap_last":
        return d["f"][N] - d["f"][-1]
    if m == "dist_last":
        return (x[N] - x[-1]) ** 2
    if m == "newton_decrement_last":
        return g[N] ** 2 / h[N]
    if m == "eta_last":
        return (eta_M(p) * g[N] / h[N]) ** 2
    raise ValueError(m)


def with_method(problem: PepProblem, method: MethodSpec) -> PepProblem:
    return replace(problem, method=method)
