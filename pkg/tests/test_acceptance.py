"""Acceptance checks, one test per criterion; each prints a PASS/FAIL line with the measured error."""

import io
import math
import time

import numpy as np
import pytest

from conftest import record
from univpep import methods as mt
from univpep.classes import (generalized_sc, hessian_lipschitz, membership_residual, quasi_self_concordant,
                             self_concordant, strongly_convex_hl)
from univpep.experiments import fig6_cnm_rates, fig13_gnm1_N
from univpep.extremal import integral_bounds, reconstruct_interpolant
from univpep.interpolation import Dataset, check
from univpep.named import named_worst_case
from univpep.pep import InitialCondition, PepProblem, SolverConfig, solve, solve_relaxed, verify
from univpep.sampling import random_dataset


def _table_csv(table) -> str:
    buf = io.StringIO()
    mt.write_rows(buf, table.header, table.rows)
    return buf.getvalue()


# ------------------------------------------------------------------ 1

def test_cnm_one_step_tightness():
    M = 1.0
    fn = named_worst_case("cnm_tight", M=M)
    tr = mt.run(mt.cubic_newton(M), fn, 0.0, 1)
    descent_err = abs((tr.f[0] - tr.f[1]) - 10 / 3)
    grad_err = abs(abs(tr.g[1]) - 4)

    problem = PepProblem(hessian_lipschitz(M), mt.cubic_newton(M), 1, "abs_grad_last",
                         InitialCondition("func_gap", 1.0))
    t0 = time.perf_counter()
    sol = solve(problem, SolverConfig())
    elapsed = time.perf_counter() - t0
    target = (12 / 5) ** (2 / 3)
    pep_err = abs(sol.value - target)

    ok = descent_err <= 1e-12 and grad_err <= 1e-12 and pep_err <= 1e-2 and elapsed < 30
    record(1, ok, f"descent err {descent_err:.1e}, |g1| err {grad_err:.1e}, "
                  f"PEP {sol.value:.7f} vs {target:.7f} (err {pep_err:.1e}), {elapsed:.1f}s")
    assert descent_err <= 1e-12 and grad_err <= 1e-12
    assert pep_err <= 1e-2
    assert elapsed < 30


# ------------------------------------------------------------------ 2

def test_improved_descent_is_five_times_old_gradient_branch():
    M = 1.0
    worst = 0.0
    for g in np.linspace(0.01, 10.0, 100):
        old_gradient_branch = mt.cnm_descent_old(g, 0.0, M)  # h_next = 0 selects the gradient branch
        worst = max(worst, abs(mt.cnm_descent_improved(g, M) / old_gradient_branch - 5))
    ok = worst <= 1e-12
    record(2, ok, f"max |ratio - 5| = {worst:.1e} over 100 gradients")
    assert ok


# ------------------------------------------------------------------ 3

def test_sc_newton_one_step():
    cfg = SolverConfig()
    worst_gap, worst_memb, worst_time = 0.0, 0.0, 0.0
    for lam in np.round(np.arange(0.1, 1.0, 0.1), 10):
        problem = PepProblem(self_concordant(), mt.newton(), 1, "newton_decrement_last",
                             InitialCondition("newton_decrement", float(lam)))
        t0 = time.perf_counter()
        sol = solve(problem, cfg)
        worst_time = max(worst_time, time.perf_counter() - t0)
        worst_gap = max(worst_gap, abs(sol.value - mt.sc_newton(float(lam))))
        worst_memb = max(worst_memb, sol.membership)
    ok = worst_gap <= 1e-3 and worst_memb <= 1e-4 and worst_time < 60
    record(3, ok, f"max |PEP - bound| {worst_gap:.1e}, max membership {worst_memb:.1e}, "
                  f"slowest point {worst_time:.1f}s")
    assert ok


# ------------------------------------------------------------------ 4

def test_sc_damped_newton_two_steps():
    lam0, N = 0.4, 2
    lams, gammas = [lam0], []
    for _ in range(N):
        gammas.append(mt.dnm_sc_max_gamma(lams[-1]))
        lams.append(mt.dnm_sc(lams[-1], gammas[-1]))
    composed = lams[-1]

    problem = PepProblem(self_concordant(), mt.damped_newton(tuple(gammas)), N, "newton_decrement_last",
                         InitialCondition("newton_decrement", lam0))
    sol = solve(problem, SolverConfig())
    pep_err = abs(sol.value - composed)

    tr = mt.run(mt.damped_newton(tuple(gammas)), named_worst_case("dnm_sc_tight", R=lam0), 0.0, N)
    traj_err = max(abs(a - b) for a, b in zip(tr.newton_decrement, lams))
    ok = pep_err <= 1e-3 and traj_err <= 1e-10
    record(4, ok, f"PEP {sol.value:.7f} vs composed {composed:.7f} (err {pep_err:.1e}), "
                  f"trajectory err {traj_err:.1e}")
    assert ok


# ------------------------------------------------------------------ 5

def test_sc_newton_two_steps_beats_composition():
    margins = {}
    for lam in (0.3, 0.5, 0.7):
        problem = PepProblem(self_concordant(), mt.newton(), 2, "newton_decrement_last",
                             InitialCondition("newton_decrement", lam))
        sol = solve(problem, SolverConfig())
        composed = mt.compose(mt.sc_newton, lam, 2)[-1]
        margins[lam] = composed - sol.value
    ok = all(m > 1e-3 for m in margins.values())
    record(5, ok, "composed - PEP: " + ", ".join(f"{k}: {v:.4f}" for k, v in margins.items()))
    assert ok


# ------------------------------------------------------------------ 6

def test_qsc_gnm1_one_step():
    cfg = SolverConfig()
    errs, below = {}, {}
    for eta in (0.25, 0.5, 0.75, 1.0):
        problem = PepProblem(quasi_self_concordant(1.0), mt.grad_reg_newton1(1.0), 1, "eta_last",
                             InitialCondition("eta", eta))
        v = solve(problem, cfg).value
        if eta in (0.25, 0.5, 1.0):
            errs[eta] = abs(v - mt.gnm1_qsc(eta))
        if eta < 1:
            below[eta] = mt.gnm1_qsc_old(eta) - v
    grid = np.linspace(1e-3, 1 - 1e-3, 999)
    analytic_below = min(mt.gnm1_qsc_old(e) - mt.gnm1_qsc(e) for e in grid)
    ok = max(errs.values()) <= 1e-3 and min(below.values()) > 0 and analytic_below > 0
    record(6, ok, f"max |PEP - formula| {max(errs.values()):.1e}; min old - PEP {min(below.values()):.3f}; "
                  f"min old - new on (0,1) grid {analytic_below:.2e}")
    assert ok


# ------------------------------------------------------------------ 7

def test_qsc_newton_tightness():
    fn = named_worst_case("qsc_nm_tight", M=1.0, mu=1.0)
    tr = mt.run(mt.newton(), fn, 0.0, 1)
    err = abs(abs(tr.g[1]) - (math.e - 2))
    rhs_err = abs(mt.qsc_newton(abs(tr.g[0]), 1.0, 1.0) - abs(tr.g[1]))
    ok = err <= 1e-12 and rhs_err <= 1e-12 and abs(tr.g[0]) == 1.0
    record(7, ok, f"||g1| - (e-2)| = {err:.1e}, |bound - |g1|| = {rhs_err:.1e}")
    assert ok


# ------------------------------------------------------------------ 8

def test_newton_local_quadratic_tightness():
    M = mu = 1.0
    tr = mt.run(mt.newton(), named_worst_case("newton_local_tight", M=M, mu=mu), 0.5, 5, xstar=0.0)
    worst = max(abs(tr.dist[k + 1] - mt.newton_local_hl(tr.dist[k], M, mu)) for k in range(5))
    ok = worst <= 1e-12
    record(8, ok, f"max |r_k+1 - bound(r_k)| = {worst:.1e} over 5 steps")
    assert ok


# ------------------------------------------------------------------ 9

def test_gradient_method_tightness():
    M, L, mu, x0, N = 1.0, 1.0, 0.3, 0.42, 5
    worst = 0.0
    cases = [(named_worst_case("gm_tight_short", M=M, mu=mu), 2 / (L + mu), 1),
             (named_worst_case("gm_tight_long", M=M, L=L), 2.1 / (L + mu), 2)]
    for fn, h, branch in cases:
        tr = mt.run(mt.gradient(h), fn, x0, N, xstar=0.0)
        for k in range(N):
            r = tr.dist[k]
            b1, b2 = 1 - h * (mu - M / 2 * r), h * (L + M / 2 * r) - 1
            active = b1 if branch == 1 else b2
            ratio = tr.dist[k + 1] / r
            worst = max(worst, abs(ratio - active), abs(active - max(b1, b2)))
    ok = worst <= 1e-12
    record(9, ok, f"max deviation from the active branch {worst:.1e} over 2 x 5 steps")
    assert ok


# ------------------------------------------------------------------ 10

ROUND_TRIP_CLASSES = {
    "hessian_lipschitz": hessian_lipschitz(1.0),
    "strongly_convex_hl": strongly_convex_hl(1.0, 0.3),
    "self_concordant": self_concordant(1.0),
    "quasi_self_concordant": quasi_self_concordant(1.0),
    "generalized_sc_half": generalized_sc(1.0, 0.5),
}


def _samples(fn, spec, lo, hi, n=1000) -> Dataset:
    x = np.linspace(lo, hi, n)
    g, h = fn.derivative(x, 1), fn.derivative(x, 2)
    if spec.kind == "hl":
        return Dataset(x, fn(x), g, h)
    return Dataset(x, g=g, h=h)


def _round_trip(data: Dataset, spec) -> tuple[float, bool]:
    fn = reconstruct_interpolant(data, spec)
    lo, hi = data.x.min(), data.x.max()
    memb = membership_residual(fn, spec, np.linspace(lo, hi, 1000)).max_residual
    recheck = check(_samples(fn, spec, lo, hi), spec, feastol=1e-8, pairs="consecutive")
    return memb, recheck.feasible


def _push_past_bound(data: Dataset, spec, rng) -> Dataset:
    """Move one integrated value 1e-6 beyond the closed-form range allowed by its left neighbour."""
    k = int(rng.integers(1, len(data)))
    field = "f" if spec.kind == "hl" else "g"
    pts = [(data.x[i], None if data.f is None else data.f[i], data.g[i], data.h[i]) for i in range(len(data))]
    lo, hi = integral_bounds(pts[k - 1], pts[k], spec)
    base = getattr(data, field)[k - 1]
    values = getattr(data, field).copy()
    ends = [e for e in ((hi, 1e-6), (lo, -1e-6)) if math.isfinite(e[0])]  # an infinite end cannot be passed
    end, push = ends[int(rng.integers(len(ends)))]
    values[k] = base + end + push
    kw = {"f": data.f, "g": data.g, "h": data.h, field: values}
    return Dataset(data.x, **kw)


@pytest.mark.parametrize("name", list(ROUND_TRIP_CLASSES))
def test_interpolation_round_trip(name):
    spec = ROUND_TRIP_CLASSES[name]
    rng = np.random.default_rng(2024)
    worst_memb, bad_recheck, accepted_pushes = 0.0, 0, 0
    for _ in range(200):
        data = random_dataset(rng, spec, 3, edge_prob=0.2)
        memb, feasible = _round_trip(data, spec)
        worst_memb = max(worst_memb, memb)
        bad_recheck += not feasible
    for _ in range(200):
        data = random_dataset(rng, spec, 3, edge_prob=0.2)
        pushed = _push_past_bound(data, spec, rng)
        accepted_pushes += check(pushed, spec).feasible
    ok = worst_memb <= 1e-4 and bad_recheck == 0 and accepted_pushes == 0
    record(10, ok, f"{name}: max membership {worst_memb:.1e}, failed re-checks {bad_recheck}/200, "
                   f"accepted perturbations {accepted_pushes}/200")
    assert ok


# ------------------------------------------------------------------ 11

def test_cnm_hessian_measure_along_runs():
    M = 1.0
    spec = hessian_lipschitz(M)
    rng = np.random.default_rng(7)
    worst = math.inf
    for _ in range(100):
        data = random_dataset(rng, spec, 3)
        fn = reconstruct_interpolant(data, spec)
        tr = mt.run(mt.cubic_newton(M), fn, float(data.x[0]), 3)
        for k in range(1, tr.x.size):
            residual = math.sqrt(abs(tr.g[k]) / M) - mt.cnm_hessian_measure(tr.h[k], M)
            worst = min(worst, residual)
    ok = worst >= -1e-8
    record(11, ok, f"min residual {worst:.2e} over 100 functions x 3 steps")
    assert ok


# ------------------------------------------------------------------ 12

def test_classical_gap_and_multistep_properties():
    # GNM1 on QSC from (x0, g0, h0) = (0, 1, 1), M = 1
    problem = PepProblem(quasi_self_concordant(1.0), mt.grad_reg_newton1(1.0), 1, "eta_last",
                         InitialCondition("eta", 1.0))
    cfg = SolverConfig()
    relaxed = solve_relaxed(problem, cfg)
    exact_residual = check(relaxed.witness, problem.cls).max_residual
    exact = solve(problem, cfg)
    report = verify(exact, problem)
    gap_ok = exact_residual > 1e-3 and report.feasible and exact.membership <= 1e-4

    fig13 = fig13_gnm1_N(cfg)[0]
    v13 = [r[1] for r in fig13.rows]
    env13 = [r[2] for r in fig13.rows]
    fig13_ok = (all(b < a for a, b in zip(v13, v13[1:]))
                and all(v <= e * (1 + 1e-6) for v, e in zip(v13, env13))
                and _table_csv(fig13) == _table_csv(fig13_gnm1_N(cfg)[0]))

    fig6 = fig6_cnm_rates(cfg)[0]
    best = [r[1] for r in fig6.rows]
    env6 = [r[4] for r in fig6.rows]
    rerun = fig6_cnm_rates(cfg, N_max=2)[0]
    fig6_ok = (all(b <= a for a, b in zip(best, best[1:]))
               and all(v <= e * (1 + 1e-6) for v, e in zip(best, env6))
               and _table_csv(rerun) == _table_csv(type(fig6)(fig6.name, fig6.header, fig6.rows[:2])))

    ok = gap_ok and fig13_ok and fig6_ok
    record(12, ok, f"classical worst eta {relaxed.value:.5f} violates exact by {exact_residual:.3f}, "
                   f"exact worst {exact.value:.5f} certified={report.feasible}; "
                   f"fig13 ok={fig13_ok}, fig6 ok={fig6_ok}")
    assert ok


if __name__ == "__main__":
    import sys
    sys.exit(pytest.main([__file__, "-q"]))
