"""Function classes built from generalized Lipschitz conditions.

A class is described by the order of integration, the Lipschitz constant M,
the exponent alpha and a sign flag.  The basic function of a class is the
derivative of order ``order`` minus the shift ``mu``; it must satisfy
``|q'| <= |beta(alpha)| * M * q**alpha`` (with ``q >= 0`` when ``nonneg``).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Any

import numpy as np


class DomainError(ValueError):
    """A value lies outside the domain required by a class or transform."""


KINDS = ("hl", "schl", "sc", "qsc", "gsc", "basic", "smooth")

# (order, alpha, nonneg) implied by each named kind; None means user supplied.
_KIND_DEFAULTS = {
    "hl": (2, 0.0, False),
    "schl": (2, 0.0, True),
    "sc": (2, 1.5, True),
    "qsc": (2, 1.0, True),
    "gsc": (2, None, True),
    "basic": (0, None, None),
    "smooth": (1, 0.0, False),
}


@dataclass(frozen=True)
class ClassSpec:
    kind: str
    M: float
    alpha: float = 0.0
    nonneg: bool = False
    order: int = 2
    mu: float = 0.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown class kind {self.kind!r}")
        if not (self.M > 0 and math.isfinite(self.M)):
            raise ValueError("M must be positive and finite")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if not self.nonneg and self.alpha != 0:
            raise ValueError("classes without sign constraint require alpha = 0")
        if self.order not in (0, 1, 2):
            raise ValueError("order must be 0, 1 or 2")
        if self.mu < 0:
            raise ValueError("mu must be nonnegative")

    @property
    def beta(self) -> float:
        return beta(self.alpha)

    @property
    def has_values(self) -> bool:
        """Whether interpolation conditions involving function values exist."""
        return self.kind == "hl" or self.order <= 1

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, d: dict[str, Any]) -> "ClassSpec":
        kind = d["kind"]
        if kind not in KINDS:
            raise ValueError(f"unknown class kind {kind!r}")
        order, alpha, nonneg = _KIND_DEFAULTS[kind]
        if alpha is None:
            if "alpha" not in d:
                raise ValueError(f"class kind {kind!r} requires alpha")
            alpha = float(d["alpha"])
        if nonneg is None:
            nonneg = bool(d.get("nonneg", True))
        if "M" not in d and kind != "sc":
            raise ValueError(f"class kind {kind!r} requires M")
        kw = dict(kind=kind, M=float(d.get("M", 1.0)), alpha=alpha, nonneg=nonneg,
                  order=int(d.get("order", order)), mu=float(d.get("mu", 0.0)))
        return cls(**kw)


def hessian_lipschitz(M: float) -> ClassSpec:
    return ClassSpec("hl", M, 0.0, False, 2)


def strongly_convex_hl(M: float, mu: float = 0.0) -> ClassSpec:
    return ClassSpec("schl", M, 0.0, True, 2, mu)


def self_concordant(M: float = 1.0) -> ClassSpec:
    return ClassSpec("sc", M, 1.5, True, 2)


def quasi_self_concordant(M: float) -> ClassSpec:
    return ClassSpec("qsc", M, 1.0, True, 2)


def generalized_sc(M: float, alpha: float, order: int = 2) -> ClassSpec:
    return ClassSpec("gsc", M, alpha, True, order)


def basic_lipschitz(M: float, alpha: float = 0.0, nonneg: bool = True) -> ClassSpec:
    return ClassSpec("basic", M, alpha, nonneg, 0)


def smooth(M: float) -> ClassSpec:
    """Functions with M-Lipschitz derivative."""
    return ClassSpec("smooth", M, 0.0, False, 1)


def beta(alpha: float) -> float:
    """Exponent linking a basic function to its transformed Lipschitz version."""
    return 1.0 if alpha == 1 else 1.0 / (1.0 - alpha)


def tilde_transform(v, alpha: float):
    """Map values to the space where the class condition is plain Lipschitz.

    Uses ``v**(1 - alpha)`` for ``alpha != 1`` and ``log v`` for ``alpha == 1``.
    For ``alpha > 1`` the value ``+inf`` maps to 0.
    """
    arr = np.asarray(v, dtype=float)
    if np.any(np.isnan(arr)):
        raise DomainError("nan value")
    if alpha == 0:
        out = arr.copy()
    elif alpha == 1:
        if np.any(arr <= 0):
            raise DomainError("log transform needs positive values")
        out = np.log(arr)
    elif alpha < 1:
        if np.any(arr < 0):
            raise DomainError("negative value in a sign-constrained transform")
        out = np.power(arr, 1.0 - alpha)
    else:
        if np.any(arr <= 0):
            raise DomainError("alpha > 1 transform needs positive values")
        with np.errstate(divide="ignore"):
            out = np.where(np.isinf(arr), 0.0, np.power(arr, 1.0 - alpha))
    return float(out) if np.ndim(out) == 0 else out


def inverse_tilde(t, alpha: float):
    """Inverse of :func:`tilde_transform` (``nu`` in the envelope formulas)."""
    arr = np.asarray(t, dtype=float)
    if alpha == 0:
        out = arr.copy()
    elif alpha == 1:
        out = np.exp(arr)
    else:
        b = beta(alpha)
        with np.errstate(divide="ignore"):
            out = np.where(arr == 0, np.inf if b < 0 else 0.0, np.power(np.maximum(arr, 0.0), b))
    return float(out) if np.ndim(out) == 0 else out


def fd_step(x):
    return np.maximum(1e-5, 1e-5 * np.abs(x))


@dataclass
class MembershipReport:
    max_residual: float
    argmax: float
    residuals: np.ndarray

    @property
    def ok(self) -> bool:
        return self.max_residual <= 1e-4


def _basic_and_slope(f, spec: ClassSpec, x: np.ndarray):
    q = np.asarray(f.derivative(x, spec.order), dtype=float) - spec.mu
    if spec.order < 2:
        qp = np.asarray(f.derivative(x, spec.order + 1), dtype=float)
    else:
        # third derivative by central differences of the second
        h = fd_step(x)
        qp = (np.asarray(f.derivative(x + h, 2), dtype=float)
              - np.asarray(f.derivative(x - h, 2), dtype=float)) / (2 * h)
    return q, qp


def membership_residual(f, spec: ClassSpec, grid) -> MembershipReport:
    """Largest violation of the class's one-point condition on ``grid``.

    The slope excess ``|q'| - |beta| M q**alpha`` is divided by
    ``max(1, |beta| M q**alpha)``; a negative basic function counts as an
    absolute violation for sign-constrained classes.  ``f`` must expose
    ``derivative(x, k)`` accepting arrays.  Points where the basic function is
    infinite are skipped.
    """
    x = np.asarray(grid, dtype=float)
    q, qp = _basic_and_slope(f, spec, x)
    b = abs(spec.beta)
    finite = np.isfinite(q) & np.isfinite(qp)
    qs = np.where(finite, q, 0.0)
    if spec.alpha == 0:
        bound = spec.M * np.ones_like(qs)
    else:
        bound = b * spec.M * np.power(np.maximum(qs, 0.0), spec.alpha)
    # relative to the bound once it exceeds 1, so large curvature is judged fairly
    res = (np.abs(np.where(finite, qp, 0.0)) - bound) / np.maximum(bound, 1.0)
    if spec.nonneg:
        res = np.maximum(res, -qs)
    # an infinite basic function is an allowed plateau; anything else is broken
    res = np.where(finite, res, np.where(np.isposinf(q), -np.inf, np.inf))
    if not res.size:
        return MembershipReport(0.0, math.nan, res)
    k = int(np.argmax(res))
    return MembershipReport(max(float(res[k]), 0.0), float(x[k]), res)
