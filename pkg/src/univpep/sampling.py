"""Random feasible datasets, built by chaining consecutive feasible increments."""

from __future__ import annotations

import math

import numpy as np

from .classes import ClassSpec, inverse_tilde, tilde_transform
from .extremal import _hl_value_interval, _lifted_interval
from .interpolation import Dataset


def _basic_walk(rng, x, spec: ClassSpec, start: float | None = None) -> np.ndarray:
    """Basic-function values whose transformed version is M-Lipschitz."""
    n = len(x)
    if not spec.nonneg:
        v = np.empty(n)
        v[0] = rng.uniform(-1, 1) if start is None else start
        for k in range(1, n):
            v[k] = v[k - 1] + spec.M * (x[k] - x[k - 1]) * rng.uniform(-0.95, 0.95)
        return v
    t = np.empty(n)
    t[0] = tilde_transform(rng.uniform(0.3, 2.0) if start is None else start, spec.alpha)
    for k in range(1, n):
        step = spec.M * (x[k] - x[k - 1]) * rng.uniform(-0.95, 0.95)
        t[k] = t[k - 1] + step
        if spec.alpha != 1 and t[k] <= 0.05 * t[0]:
            t[k] = t[k - 1] + abs(step)
    return np.asarray(inverse_tilde(t, spec.alpha), dtype=float)


def _increment(rng, lo: float, hi: float, edge_prob: float) -> float:
    if lo > hi:
        if lo - hi > 1e-12 * (1 + abs(lo)):
            raise ValueError("empty feasible range while sampling")
        return 0.5 * (lo + hi)
    u = rng.uniform()
    if u < edge_prob / 2:
        return lo
    if u < edge_prob and math.isfinite(hi):
        return hi
    if not math.isfinite(hi):
        return lo + rng.exponential(1.0 + abs(lo))
    return lo + rng.uniform() * (hi - lo)


def random_dataset(rng: np.random.Generator, spec: ClassSpec, n: int = 3, with_values: bool | None = None,
                   gap: tuple[float, float] = (0.2, 1.2), edge_prob: float = 0.0) -> Dataset:
    """A feasible ``n``-point dataset for ``spec`` (sorted by x)."""
    x = np.cumsum(np.concatenate([[rng.uniform(-1, 1)], rng.uniform(*gap, size=n - 1)]))
    mu = spec.mu
    if spec.order == 0:
        return Dataset(x, f=_basic_walk(rng, x, spec) + mu)
    G = _basic_walk(rng, x, spec) + mu
    F = np.empty(n)
    F[0] = rng.uniform(-1, 1)
    for k in range(1, n):
        lo, hi = _lifted_interval(x[k - 1], x[k], G[k - 1] - mu, G[k] - mu, spec.M, spec.alpha, spec.nonneg)
        shift = mu * (x[k] - x[k - 1])
        F[k] = F[k - 1] + _increment(rng, lo + shift, hi + shift, edge_prob)
    if spec.order == 1:
        return Dataset(x, f=F, g=G)
    if with_values is None:
        with_values = spec.kind == "hl"
    if not with_values:
        return Dataset(x, g=F, h=G)
    f = np.empty(n)
    f[0] = rng.uniform(-1, 1)
    for k in range(1, n):
        lo, hi = _hl_value_interval(x[k - 1], F[k - 1], G[k - 1], x[k], F[k], G[k], spec.M)
        f[k] = f[k - 1] + _increment(rng, lo, hi, edge_prob)
    return Dataset(x, f=f, g=F, h=G)
