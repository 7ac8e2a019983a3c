"""Multi-start local search for worst cases, and certification of the result.

The search is a lower bound on the true worst case: every reported value
comes from a dataset that passes the exact interpolation checker, whose
reconstructed function lies in the class and reproduces the iterates when the
method is replayed on it.
"""

from __future__ import annotations

import functools
import itertools
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize

from ..classes import membership_residual
from ..extremal import InfeasibleError, reconstruct_interpolant
from ..interpolation import Dataset, check, classical_necessary
from ..methods import cubic_minimizers, step_from_derivatives
from ..piecewise import PiecewiseFunction
from .constraints import ordered_pairs
from .known import known_value
from .problem import Formulation, PepProblem, formulate

METHOD_TOL = 1e-8
REPLAY_TOL = 1e-6
MEMBERSHIP_TOL = 1e-4
KNOWN_TOL = 1e-3


class CertificationError(RuntimeError):
    """A candidate worst case could not be certified; no value may be reported."""


class NoFeasiblePointError(RuntimeError):
    """No start converged to a point satisfying the constraints."""


@dataclass(frozen=True)
class SolverConfig:
    restarts: int = 256
    seed: int = 0
    grid_resolution: int = 32
    grid_keep: int = 8
    feastol: float = 1e-8
    polish_iterations: int = 300
    threads: Optional[int] = None
    certify_candidates: int = 12

    def workers(self) -> int:
        if self.threads is not None:
            return max(1, int(self.threads))
        return max(1, int(os.environ.get("UNIVPEP_THREADS", "1")))


@dataclass
class PepSolution:
    value: float
    witness: Dataset
    feasibility_residual: float
    certificate: Optional[PiecewiseFunction]
    replay_residual: float
    membership: float
    solver_stats: dict
    known: Optional[float] = None
    flags: list = field(default_factory=list)
    z: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        return {
            "value": self.value,
            "witness": self.witness.to_points(),
            "feasibility_residual": self.feasibility_residual,
            "replay_residual": self.replay_residual,
            "membership_residual": self.membership,
            "known_value": self.known,
            "flags": list(self.flags),
            "solver_stats": self.solver_stats,
            "certificate": None if self.certificate is None else self.certificate.to_json(),
        }


@dataclass
class CertificateReport:
    feasible: bool
    max_residual: float
    method_residual: float
    replay_residual: float
    membership: float
    certificate: Optional[PiecewiseFunction]
    classical: Optional[dict] = None


# ------------------------------------------------------------------ local search

def _quiet(fn):
    """Run ``fn`` with floating point warnings silenced."""
    @functools.wraps(fn)
    def wrapper(*a, **k):
        with np.errstate(all="ignore"), warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return fn(*a, **k)
    return wrapper


def _safe(fn, z, bad):
    # callers silence floating point warnings once around the whole search
    try:
        v = fn(z)
    except (ArithmeticError, ValueError):
        return bad(z)
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        b = bad(z)
        return np.where(np.isfinite(v), v, b) if v.ndim else b
    return v if v.ndim else float(v)


_FD_STEP = math.sqrt(np.finfo(float).eps)


def _forward_jacobian(fn, lo, hi):
    """Forward differences that step inward at the upper bound; ``fn`` may return a scalar or a vector."""
    def jac(z):
        f0 = np.asarray(fn(z), dtype=float)
        out = np.empty((f0.size, z.size))
        for i in range(z.size):
            h = _FD_STEP * max(1.0, abs(z[i]))
            if z[i] + h > hi[i]:
                h = -h
            zi = z.copy()
            zi[i] += h
            out[:, i] = (np.asarray(fn(zi), dtype=float).ravel() - f0.ravel()) / h
        return out[0] if f0.ndim == 0 else out
    return jac


@_quiet
def _polish(form: Formulation, z0: np.ndarray, margin: float, iters: int, cons=None,
            ftol: float = 1e-10) -> np.ndarray:
    """Local search from ``z0``: feasibility restoration, then SLSQP on two objective scalings.

    One route divides the surrogate by its value at the restored start, the
    other works with its logarithm; the better feasible end point wins.
    """
    cons = cons or form.constraints
    m = len(_safe(cons, z0, lambda z: np.zeros(1)))
    bad_c = lambda z: np.full(m, 1e6)  # noqa: E731
    value = lambda z: _safe(form.objective, z, lambda _: 0.0)  # noqa: E731
    ineq = lambda z: -_safe(cons, z, bad_c) - margin  # noqa: E731
    lo = np.array([v.lo for v in form.variables])
    hi = np.array([v.hi for v in form.variables])
    bounds = list(zip(lo, hi))
    feasible = lambda z: np.max(-ineq(z)) <= 1e-9  # noqa: E731
    viol = lambda z: float(np.sum(np.maximum(-ineq(z), 0.0) ** 2))  # noqa: E731

    def restore(z):
        if np.max(-ineq(z)) > 0:
            z = np.clip(minimize(viol, z, method="L-BFGS-B", bounds=bounds, options={"maxiter": iters}).x, lo, hi)
        return _lift_epigraph(form, z)

    def run(z, log_scale):
        for i in range(3):
            if i:
                z = restore(z)
            if log_scale:
                fun = lambda z: -math.log(max(value(z), 1e-300))  # noqa: E731
            else:
                scale = max(abs(value(z)), 1e-300)
                fun = lambda z: -value(z) / scale  # noqa: E731
            res = minimize(fun, z, method="SLSQP", jac=_forward_jacobian(fun, lo, hi), bounds=bounds,
                           constraints=[{"type": "ineq", "fun": ineq, "jac": _forward_jacobian(ineq, lo, hi)}],
                           options={"maxiter": iters, "ftol": ftol})
            z = np.clip(res.x, lo, hi)
            if feasible(z):
                break
        return z

    start = restore(np.clip(z0, lo, hi))
    ends = [run(start, False), run(start, True)]
    ok = [z for z in ends if feasible(z)]
    if not ok:
        return min(ends, key=viol)
    return max(ok, key=value)


def _lift_epigraph(form: Formulation, z: np.ndarray) -> np.ndarray:
    """Raise the best-iterate variable to its largest feasible value."""
    k = form._index.get("tau")
    if k is None:
        return z
    with np.errstate(all="ignore"):
        g = form.decode(z)["g"][1:form.problem.N + 1]
    if not np.all(np.isfinite(g)):
        return z
    z = z.copy()
    z[k] = min(float(np.min(np.abs(g))) * (1 - 1e-9), form.variables[k].hi)
    return z


@_quiet
def _starts(form: Formulation, cfg: SolverConfig, cons) -> list[np.ndarray]:
    lo = np.array([v.start_lo for v in form.variables])
    hi = np.array([v.start_hi for v in form.variables])
    out = []
    if form.dim <= 3 and cfg.grid_resolution > 1:
        axes = [np.linspace(a, b, cfg.grid_resolution) for a, b in zip(lo, hi)]
        scored = []
        for z in itertools.product(*axes):
            z = np.array(z)
            c = _safe(cons, z, lambda _: np.array([np.inf]))
            if np.max(c) <= 0:
                scored.append((-_safe(form.objective, z, lambda _: -np.inf), tuple(z)))
        scored.sort()
        out.extend(np.array(z) for _, z in scored[: cfg.grid_keep])
    for i in range(cfg.restarts):
        rng = np.random.default_rng([cfg.seed, i])
        out.append(rng.uniform(lo, hi))
    return out


def _work(args):
    problem, conditions, starts, iters = args
    form = formulate(problem)
    cons = _constraint_fn(form, conditions)
    return [_polish(form, z, 0.0, iters, cons) for z in starts]


def _constraint_fn(form: Formulation, conditions: str):
    if conditions == "exact":
        return form.constraints
    if conditions == "classical":
        return lambda z: _classical_constraints(form, z)
    raise ValueError(conditions)


def _classical_constraints(form: Formulation, z) -> np.ndarray:
    d = form.decode(z)
    spec = form.problem.cls
    if not (spec.nonneg and spec.alpha == 1):
        raise ValueError("classical conditions are implemented for quasi-self-concordant data")
    x, g, h = d["x"], d["g"], d["h"]
    I, J = ordered_pairs(len(x))
    dx = x[J] - x[I]
    adx = np.abs(dx)
    M = spec.M
    r = g[J] - g[I] - h[I] * dx - h[I] / M * (np.exp(M * adx) - M * adx - 1)
    return np.concatenate([r, d["extra"]])


def _search(problem: PepProblem, cfg: SolverConfig, conditions: str) -> tuple[Formulation, list]:
    form = formulate(problem)
    cons = _constraint_fn(form, conditions)
    starts = _starts(form, cfg, cons)
    workers = cfg.workers()
    if workers > 1 and len(starts) > 1:
        chunks = [starts[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(workers) as ex:
            parts = list(ex.map(_work, [(problem, conditions, c, cfg.polish_iterations) for c in chunks]))
        # undo the round-robin split so the order matches the serial run
        polished = [None] * len(starts)
        for w, part in enumerate(parts):
            for j, z in enumerate(part):
                polished[w + j * workers] = z
    else:
        polished = [_polish(form, z, 0.0, cfg.polish_iterations, cons) for z in starts]
    return form, polished


@_quiet
def _rank(form: Formulation, zs, cons, tol) -> list:
    ranked = []
    for z in zs:
        c = _safe(cons, z, lambda _: np.array([np.inf]))
        viol = float(np.max(c)) if np.size(c) else 0.0
        if viol > tol:
            continue
        v = _safe(form.measure, z, lambda _: np.nan)
        if not np.isfinite(v):
            continue
        ranked.append((-float(f"{v:.12g}"), tuple(np.round(z, 12)), z, v))
    ranked.sort(key=lambda t: (t[0], t[1]))
    return ranked


# ------------------------------------------------------------------ certification

def _method_residual(form: Formulation, z) -> float:
    p = form.problem
    meth = p.method
    d = form.decode(z)
    x, g, h = d["x"], d["g"], d["h"]
    worst = 0.0
    for k in range(p.N):
        if meth.kind == "cnm":
            Mc = meth.M / meth.alpha
            dk = x[k + 1] - x[k]
            foo = g[k] + h[k] * dk + Mc / 2 * dk * abs(dk)
            soo = -(h[k] + Mc / 2 * abs(dk))
            worst = max(worst, abs(foo), soo)
        else:
            worst = max(worst, abs(x[k + 1] - step_from_derivatives(meth, x[k], g[k], h[k], k)))
    return worst


def _replay(f: PiecewiseFunction, problem: PepProblem, x_witness: np.ndarray) -> float:
    """Run the method on ``f`` from the witness start; CNM may take any global model minimizer."""
    meth = problem.method
    x = float(x_witness[0])
    worst = 0.0
    for k in range(problem.N):
        g, h = float(f.derivative(x, 1)), float(f.derivative(x, 2))
        if meth.kind == "cnm":
            cands = cubic_minimizers(g, h, meth.M / meth.alpha)
            target = x_witness[k + 1] - x
            x = x + min(cands, key=lambda d: abs(d - target))
        else:
            x = step_from_derivatives(meth, x, g, h, k)
        worst = max(worst, abs(x - x_witness[k + 1]))
    return worst


def _classical_report(data: Dataset, spec, feastol) -> Optional[dict]:
    try:
        if spec.nonneg and spec.alpha == 1:
            return classical_necessary(data, spec, "qsc_existing", feastol).to_json()
        if spec.kind == "hl" and data.f is not None:
            return classical_necessary(data, spec, "cubic_bound", feastol).to_json()
    except ValueError:
        return None
    return None


def certify(data: Dataset, problem: PepProblem, method_residual: float = 0.0,
            feastol: float = 1e-8) -> CertificateReport:
    """Exact check, reconstruction, membership and replay for a witness dataset."""
    spec = problem.cls
    verdict = check(data, spec, feastol)
    if not verdict.feasible:
        raise CertificationError(f"witness violates the interpolation conditions by {verdict.max_residual:.3g}")
    if method_residual > METHOD_TOL:
        raise CertificationError(f"method equations violated by {method_residual:.3g}")
    try:
        f = reconstruct_interpolant(data, spec, feastol)
    except (InfeasibleError, ArithmeticError, ValueError) as exc:
        raise CertificationError(f"reconstruction failed: {exc}") from exc
    lo, hi = float(np.min(data.x)), float(np.max(data.x))
    span = max(hi - lo, 1.0)
    grid = np.linspace(lo - 0.25 * span, hi + 0.25 * span, 2001)
    memb = membership_residual(f, spec, grid).max_residual
    if memb > MEMBERSHIP_TOL:
        raise CertificationError(f"reconstructed function leaves the class (residual {memb:.3g})")
    n_it = problem.N + 1
    replay = _replay(f, problem, data.x[:n_it])
    if not replay <= REPLAY_TOL:
        raise CertificationError(f"replay on the reconstruction drifts by {replay:.3g}")
    return CertificateReport(True, verdict.max_residual, method_residual, replay, memb, f,
                             _classical_report(data, spec, feastol))


def verify(solution: PepSolution, problem: PepProblem, feastol: float = 1e-8) -> CertificateReport:
    """Re-certify a reported solution from its witness alone."""
    form = formulate(problem)
    mres = 0.0
    if solution.z is not None:
        mres = _method_residual(form, solution.z)
    else:
        mres = _witness_method_residual(solution.witness, problem)
    return certify(solution.witness, problem, mres, feastol)


def _witness_method_residual(data: Dataset, problem: PepProblem) -> float:
    meth = problem.method
    x, g, h = data.x, data.g, data.h
    worst = 0.0
    for k in range(problem.N):
        if meth.kind == "cnm":
            Mc = meth.M / meth.alpha
            dk = x[k + 1] - x[k]
            worst = max(worst, abs(g[k] + h[k] * dk + Mc / 2 * dk * abs(dk)), -(h[k] + Mc / 2 * abs(dk)))
        else:
            worst = max(worst, abs(x[k + 1] - step_from_derivatives(meth, x[k], g[k], h[k], k)))
    return worst


# ------------------------------------------------------------------ entry points

def solve(problem: PepProblem, config: SolverConfig | None = None) -> PepSolution:
    """Best certified worst case found by grid and multi-start local search."""
    cfg = config or SolverConfig()
    form, polished = _search(problem, cfg, "exact")
    cons = form.constraints
    ranked = _rank(form, polished, cons, 1e-7)
    if not ranked:
        raise NoFeasiblePointError("no start reached a feasible point; check the variable boxes")
    errors = []
    for _, _, z, v in ranked[: cfg.certify_candidates]:
        for margin in (0.0, 1e-10, 1e-8):
            zz = z if margin == 0.0 else _polish(form, z, margin, cfg.polish_iterations)
            data = form.dataset(zz)
            try:
                rep = certify(data, problem, _method_residual(form, zz), cfg.feastol)
            except CertificationError as exc:
                errors.append(str(exc))
                continue
            value = form.measure(zz)
            kv = known_value(problem)
            flags = []
            if kv is not None and abs(value - kv) > KNOWN_TOL * max(1.0, abs(kv)):
                flags.append("gap_to_known_value")
            stats = {"restarts": cfg.restarts, "seed": cfg.seed, "starts": len(polished),
                     "feasible_candidates": len(ranked), "margin": margin}
            return PepSolution(value, data, rep.max_residual, rep.certificate, rep.replay_residual,
                               rep.membership, stats, kv, flags, zz)
    raise CertificationError("no candidate could be certified: " + "; ".join(errors[:3]))


@dataclass
class RelaxedSolution:
    """Worst case under necessary-only conditions; deliberately not certified."""

    value: float
    witness: Dataset
    z: np.ndarray


def solve_relaxed(problem: PepProblem, config: SolverConfig | None = None) -> RelaxedSolution:
    """Same search with the classical quasi-self-concordant conditions instead of the exact ones."""
    cfg = config or SolverConfig()
    form, polished = _search(problem, cfg, "classical")
    ranked = _rank(form, polished, lambda z: _classical_constraints(form, z), 1e-9)
    if not ranked:
        raise NoFeasiblePointError("no feasible point under the classical conditions")
    _, _, z, v = ranked[0]
    return RelaxedSolution(v, form.dataset(z), z)
