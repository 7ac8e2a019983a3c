"""Analytic worst-case values for settings where a tight closed form is known."""

from __future__ import annotations

import math
from typing import Optional

from ..methods import cnm_one_step, dnm_sc, dnm_sc_max_gamma, gnm1_qsc, newton_local_hl, sc_newton


def _damping_schedule_valid(problem, lams) -> bool:
    return all(problem.method.damping(k) <= dnm_sc_max_gamma(lams[k]) * (1 + 1e-12)
               for k in range(problem.N))


def known_value(problem) -> Optional[float]:
    """Tight analytic value of ``problem`` or ``None`` when only numerics are available."""
    spec, meth, N, ini = problem.cls, problem.method, problem.N, problem.initial
    R = ini.R
    eq = ini.relation == "eq"
    if (spec.kind == "hl" and meth.kind == "cnm" and meth.alpha == 1 and N == 1
            and problem.measure in ("abs_grad_last", "abs_grad_best") and ini.kind == "func_gap"
            and not problem.stationarity):
        return cnm_one_step(R, meth.M) if meth.M == spec.M else None
    if spec.kind == "sc" and spec.M == 1 and ini.kind == "newton_decrement" and eq \
            and problem.measure == "newton_decrement_last":
        if meth.kind == "newton" and N == 1 and R <= 1:
            return sc_newton(R)
        if meth.kind == "dnm":
            lams = [R]
            try:
                for k in range(N):
                    lams.append(dnm_sc(lams[-1], meth.damping(k)))
            except ValueError:
                return None
            return lams[-1] if _damping_schedule_valid(problem, lams) else None
    if (spec.nonneg and spec.alpha == 1 and spec.mu == 0 and meth.kind == "gnm1" and N == 1
            and meth.M == spec.M and ini.kind == "eta" and eq and problem.measure == "eta_last"):
        return gnm1_qsc(R)
    if (spec.kind == "hl" and meth.kind == "newton" and problem.stationarity and problem.hstar
            and ini.kind == "dist" and eq and problem.measure == "dist_last"):
        mu = problem.hstar
        r = R
        for _ in range(N):
            if spec.M / mu * r > 2 / 3:
                return None
            r = newton_local_hl(r, spec.M, mu)
        return r
    return None


def compose_sc_newton(lam0: float, N: int) -> Optional[float]:
    """Composition of the one-step self-concordant Newton bound, when it stays in range."""
    lam = lam0
    for _ in range(N):
        if not 0 <= lam <= 1:
            return None
        lam = sc_newton(lam)
    return lam if math.isfinite(lam) else None
