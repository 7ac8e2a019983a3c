"""Plot-data generators: solver values next to analytic baselines, one CSV per table."""

from __future__ import annotations

import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import methods as mt
from .classes import hessian_lipschitz, quasi_self_concordant, self_concordant, strongly_convex_hl
from .named import dnm_hl_first, dnm_hl_second, gm_tight_long, newton_local_tight
from .pep import InitialCondition, PepProblem, SolverConfig, compose_sc_newton, solve


@dataclass
class Table:
    name: str
    header: list
    rows: list = field(default_factory=list)


def write_table(table: Table, outdir) -> Path:
    """Write ``<outdir>/<name>.csv`` atomically."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / f"{table.name}.csv"
    fd, tmp = tempfile.mkstemp(dir=outdir, prefix=f".{table.name}.", suffix=".tmp")
    with os.fdopen(fd, "w", newline="") as fh:
        mt.write_rows(fh, table.header, table.rows)
    os.replace(tmp, path)
    return path


def _pep(problem, cfg):
    return solve(problem, cfg).value


def _blank(fn, *a, **k):
    try:
        v = fn(*a, **k)
    except (ValueError, ArithmeticError):
        return None
    return v if v is not None and math.isfinite(v) else None


# ------------------------------------------------------------------ experiments

def fig6_cnm_rates(cfg, M=1.0, gap=1.0, N_max=4):
    t = Table("fig6_cnm_rates", ["N", "worst_best_abs_g", "worst_last_abs_g", "bound_classical", "bound_improved"])
    for N in range(1, N_max + 1):
        best = _pep(PepProblem(hessian_lipschitz(M), mt.cubic_newton(M), N, "abs_grad_best",
                               InitialCondition("func_gap", gap)), cfg)
        last = _pep(PepProblem(hessian_lipschitz(M), mt.cubic_newton(M), N, "abs_grad_last",
                               InitialCondition("func_gap", gap)), cfg)
        t.rows.append([N, best, last, mt.cnm_sublinear_old(gap, N, M), mt.cnm_sublinear_new(gap, N, M)])
    return [t]


def fig7_cnm_alpha(cfg, Ms=(0.5, 1.0, 2.0), alphas=None, gap=1.0):
    alphas = np.round(np.linspace(0.25, 3.0, 12), 10) if alphas is None else alphas
    t = Table("fig7_cnm_alpha", ["M", "alpha", "worst_abs_g1", "analytic_bound_if_any"])
    for M in Ms:
        for a in alphas:
            v = _pep(PepProblem(hessian_lipschitz(M), mt.cubic_newton(M, float(a)), 1, "abs_grad_last",
                                InitialCondition("func_gap", gap)), cfg)
            t.rows.append([M, float(a), v, mt.cnm_one_step(gap, M) if a == 1 else None])
    return [t]


def fig8_gnm2_local(cfg, M=1.0, mu=0.1, N_max=4):
    """Solved in units where M = mu = 1 (f -> (M^2/mu^3) f(mu x / M)), reported in the original units."""
    R = mu**2 / (4 * M)
    unit = mu**2 / M
    t = Table("fig8_gnm2_local", ["N", "worst_abs_g", "bound_composed"])
    for N in range(1, N_max + 1):
        v = _pep(PepProblem(strongly_convex_hl(1.0, 1.0), mt.grad_reg_newton2(1.0), N, "abs_grad_last",
                            InitialCondition("abs_grad", R / unit, "le")), cfg)
        b = mt.compose(lambda g: mt.gnm2_local(g, M, mu), R, N)[-1]
        t.rows.append([N, v * unit, b])
    return [t]


def _gm_table(name, fn, step, x0, N, M, mu, L, branch):
    tr = mt.run(mt.gradient(step), fn, x0, N, xstar=0.0, M=M)
    t = Table(name, list(mt.CSV_COLUMNS) + ["ratio", "bound_ratio", "branch_ratio"])
    for k, row in enumerate(tr.rows()):
        if k < N:
            r = tr.dist[k]
            ratio = tr.dist[k + 1] / r
            b = mt.gm_local_ratio(r, M, mu, L, step)
            br = 1 - step * (mu - M / 2 * r) if branch == 1 else step * (L + M / 2 * r) - 1
        else:
            ratio = b = br = None
        t.rows.append(row + [ratio, b, br])
    return t


def fig9_gm_regimes(cfg=None, x0=0.42, M=1.0, L=1.0, mu=0.3, N=5):
    short = 2 / (L + mu)
    long = 2.1 / (L + mu)
    return [
        _gm_table("fig9_gm_regimes_f", newton_local_tight(M, mu), short, x0, N, M, mu, L, 1),
        _gm_table("fig9_gm_regimes_g", gm_tight_long(M, L), long, x0, N, M, mu, L, 2),
    ]


def dnm_on_function(fn, x0, gamma, N) -> float:
    """Final distance to the stationary point 0, or nan if the run breaks down."""
    try:
        tr = mt.run(mt.damped_newton(gamma), fn, x0, N, xstar=0.0)
    except (ArithmeticError, ValueError):
        return math.nan
    d = tr.dist[-1]
    return float(d) if np.isfinite(d) else math.nan


def dnm_family_worst(factory: Callable, a_grid, r, gamma, N, M, mu) -> float:
    best = -math.inf
    for a in a_grid:
        try:
            fn = factory(M, mu, float(a))
        except ValueError:
            continue
        for x0 in (r, -r):
            v = dnm_on_function(fn, x0, gamma, N)
            if np.isfinite(v):
                best = max(best, v)
    return best if best > -math.inf else math.nan


def _dnm_row(cfg, r, gamma, N, M, mu, a_grid):
    v = _pep(PepProblem(hessian_lipschitz(M), mt.damped_newton(gamma), N, "dist_last",
                        InitialCondition("dist", r), stationarity=True, hstar=mu), cfg)
    f = max(dnm_on_function(newton_local_tight(M, mu), s * r, gamma, N) for s in (1, -1))
    g = dnm_family_worst(dnm_hl_first, a_grid[a_grid < mu], r, gamma, N, M, mu)
    h = dnm_family_worst(dnm_hl_second, a_grid[a_grid <= mu], r, gamma, N, M, mu)
    return [v, f, g, h]


def fig10_dnm_r(cfg, M=1.0, mu=1.0, gamma=0.9, N=3, rs=None):
    rs = np.round(np.linspace(0.05, 2 / 3, 10), 10) if rs is None else rs
    a_grid = np.linspace(-4.0, mu, 201)
    t = Table("fig10_dnm_r", ["r", "worst_dist", "dist_on_f", "dist_on_g_best", "dist_on_h_best"])
    for r in rs:
        t.rows.append([float(r)] + _dnm_row(cfg, float(r), gamma, N, M, mu, a_grid))
    return [t]


def fig10b_dnm_alpha(cfg, M=1.0, mu=1.0, N=3, gammas=None):
    gammas = np.round(np.linspace(0.1, 1.0, 10), 10) if gammas is None else gammas
    r = 2 / 3 * mu / M
    a_grid = np.linspace(-4.0, mu, 201)
    t = Table("fig10b_dnm_alpha", ["gamma", "worst_dist", "dist_on_f", "dist_on_g_best", "dist_on_h_best"])
    for gmm in gammas:
        t.rows.append([float(gmm)] + _dnm_row(cfg, r, float(gmm), N, M, mu, a_grid))
    return [t]


def fig11_sc_nm_two_steps(cfg, lams=None, N=2):
    lams = np.round(np.linspace(0.05, 0.95, 19), 10) if lams is None else lams
    t = Table("fig11_sc_nm_two_steps", ["lambda0", "worst_lambda_N", "bound_composed_exact", "bound_composed_classical"])
    for lam in lams:
        v = _pep(PepProblem(self_concordant(), mt.newton(), N, "newton_decrement_last",
                            InitialCondition("newton_decrement", float(lam))), cfg)
        classical = _blank(lambda: _compose_checked(mt.sc_newton_classical, float(lam), N))
        t.rows.append([float(lam), v, compose_sc_newton(float(lam), N), classical])
    return [t]


def _compose_checked(fn, x0, N):
    v = x0
    for _ in range(N):
        v = fn(v)
    return v


def fig12_gnm1_one_step(cfg, etas=None, M=1.0):
    etas = np.round(np.linspace(0.1, 2.0, 20), 10) if etas is None else etas
    t = Table("fig12_gnm1_one_step", ["eta0", "worst_eta1", "bound_exact", "bound_classical"])
    for e in etas:
        v = _pep(PepProblem(quasi_self_concordant(M), mt.grad_reg_newton1(M), 1, "eta_last",
                            InitialCondition("eta", float(e))), cfg)
        t.rows.append([float(e), v, mt.gnm1_qsc(float(e)), mt.gnm1_qsc_old(float(e))])
    return [t]


def fig13_gnm1_N(cfg, eta0=0.4, M=1.0, N_max=4):
    t = Table("fig13_gnm1_N", ["N", "worst_eta_N", "bound_composed"])
    for N in range(1, N_max + 1):
        v = _pep(PepProblem(quasi_self_concordant(M), mt.grad_reg_newton1(M), N, "eta_last",
                            InitialCondition("eta", eta0, "le")), cfg)
        t.rows.append([N, v, mt.compose(mt.gnm1_qsc, eta0, N)[-1]])
    return [t]


FIG14_METHODS = ("newton", "cnm", "gnm1", "gnm2", "adnm")


def _fig14_method(name, M):
    return {"newton": mt.newton(), "cnm": mt.cubic_newton(M), "gnm1": mt.grad_reg_newton1(M),
            "gnm2": mt.grad_reg_newton2(M), "adnm": mt.adaptive_damped_newton(M)}[name]


def fig14_method_comparison(cfg, M=1.0, g0=1.0, mus=None, methods=FIG14_METHODS):
    mus = np.round(np.logspace(-0.5, 1.0, 7), 10) if mus is None else mus
    t = Table("fig14_method_comparison", ["method", "mu", "worst_abs_g1", "analytic_bound_if_any"])
    for name in methods:
        for mu in mus:
            v = _pep(PepProblem(strongly_convex_hl(M, float(mu)), _fig14_method(name, M), 1, "abs_grad_last",
                                InitialCondition("abs_grad", g0)), cfg)
            bound = mt.gnm2_local(g0, M, float(mu)) if name == "gnm2" else None
            t.rows.append([name, float(mu), v, bound])
    return [t]


EXPERIMENTS = {
    "fig6_cnm_rates": fig6_cnm_rates,
    "fig7_cnm_alpha": fig7_cnm_alpha,
    "fig8_gnm2_local": fig8_gnm2_local,
    "fig9_gm_regimes": fig9_gm_regimes,
    "fig10_dnm_r": fig10_dnm_r,
    "fig10b_dnm_alpha": fig10b_dnm_alpha,
    "fig11_sc_nm_two_steps": fig11_sc_nm_two_steps,
    "fig12_gnm1_one_step": fig12_gnm1_one_step,
    "fig13_gnm1_N": fig13_gnm1_N,
    "fig14_method_comparison": fig14_method_comparison,
}


def reproduce(name: str, outdir, cfg: SolverConfig | None = None, **params) -> list[Path]:
    try:
        fn = EXPERIMENTS[name]
    except KeyError:
        raise ValueError(f"unknown experiment {name!r}; known: {sorted(EXPERIMENTS)}") from None
    tables = fn(cfg or SolverConfig(), **params)
    return [write_table(t, outdir) for t in tables]
