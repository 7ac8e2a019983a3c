"""Fixed-length, continuous constraint forms used during local search.

Each function returns residuals that are ``<= 0`` exactly when the
corresponding exact interpolation condition holds; some are the exact
residual multiplied by a positive factor so that conditional branches join
continuously.  Certification always goes back to the exact checker.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..classes import ClassSpec


@lru_cache(maxsize=None)
def ordered_pairs(n: int):
    I, J = np.nonzero(~np.eye(n, dtype=bool))
    I.flags.writeable = J.flags.writeable = False
    return I, J


def _lipschitz(t, x, M, I, J):
    return np.abs(t[J] - t[I]) - M * np.abs(x[J] - x[I])


def lifted_smooth(spec: ClassSpec, x, F, G, I, J) -> np.ndarray:
    """Residuals for data ``(x, F, F' = G)`` of a once-integrated class (shift already removed)."""
    M, alpha = spec.M, spec.alpha
    dx = x[J] - x[I]
    dF = F[J] - F[I]
    Gi, Gj = G[I], G[J]
    if not spec.nonneg:
        rhs = (Gi**2 + Gj**2 - 0.5 * (Gi + Gj - M * dx) ** 2) / (2 * M)
        return rhs - dF
    if alpha == 1:
        lt = np.log(G)
        rhs = (Gi + Gj) / M - 2.0 / M * np.sqrt(Gi * Gj) * np.exp(-M * dx / 2)
        return np.concatenate([_lipschitz(lt, x, M, I, J), rhs - dF])
    b = 1.0 / (1.0 - alpha)
    t = G ** (1.0 - alpha)
    ti, tj = t[I], t[J]
    lip = _lipschitz(t, x, M, I, J)
    if alpha < 1:
        base = np.maximum(ti + tj - M * dx, 0.0)
        rhs = (ti ** (b + 1) + tj ** (b + 1) - 2.0 ** (-b) * base ** (b + 1)) / (M * (b + 1))
        return np.concatenate([lip, rhs - dF])
    base = np.maximum(ti + tj + M * dx, 0.0)
    if b == -1:
        with np.errstate(divide="ignore"):
            rhs = np.log(np.where(base > 0, base, 1.0) ** 2 / (4 * ti * tj)) / M
        return np.concatenate([lip, base * (rhs - dF)])
    # the exact residual times base**-(b+1); the bound is void when base <= 0
    w = base ** (-(b + 1))
    r = -(w * (ti ** (b + 1) + tj ** (b + 1)) - 2.0 ** (-b)) / (M * (b + 1)) - w * dF
    return np.concatenate([lip, r])


def hl_values_smooth(M, x, f, g, h, I, J) -> np.ndarray:
    """Hessian-Lipschitz conditions with values, the value condition multiplied by its denominator."""
    dx = x[J] - x[I]
    adx = np.abs(dx)
    dh = h[J] - h[I]
    Tg = g[J] - g[I] - h[I] * dx
    Tf = f[J] - f[I] - g[I] * dx - 0.5 * h[I] * dx**2
    D = dh + M * adx
    vals = -M / 6 * adx**3 * D + 0.5 * (Tg + M / 2 * dx * adx) ** 2 + D**4 / (96 * M**2) - D * Tf
    return np.concatenate([np.abs(dh) - M * adx, vals])


def class_residuals(spec: ClassSpec, x, f, g, h) -> np.ndarray:
    """All pairwise residuals for second-order data; ``f`` may be ``None``."""
    I, J = ordered_pairs(len(x))
    if f is not None:
        if spec.kind != "hl":
            raise ValueError("function values are only supported for the Hessian-Lipschitz class")
        return hl_values_smooth(spec.M, x, f, g, h, I, J)
    return lifted_smooth(spec, x, g - spec.mu * x, h - spec.mu, I, J)
