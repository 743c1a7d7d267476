"""Losses l(u, v) with partial derivative in the prediction u.

Constants M (bound on |dl/du|), L (smoothness) and mu (local strong
convexity) are analytic bounds derived here for |u| <= B and |v| <= B_Y.
They feed step-size suggestions only and are never enforced at runtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

KINDS = ("l2", "logistic", "poisson", "huber_sqrt", "huber_logcosh", "cauchy", "welsch")

DEFAULT_B = 10.0
# the robust non-convex losses are only locally strongly convex here
RESTRICTED_B = {"cauchy": 0.5, "welsch": 1.0 / 3.0}


class LossDomainError(ValueError):
    pass


class InvalidLabelError(ValueError):
    pass


def _constants(kind: str, B: float, BY: float) -> tuple[float, float, float]:
    t = B + BY  # largest |u - v|
    if kind == "l2":
        return 2.0 * t, 2.0, 2.0
    if kind == "logistic":
        return 1.0, 0.25, math.exp(-B) / (1.0 + math.exp(-B)) ** 2
    if kind == "poisson":
        return math.exp(B) + BY, math.exp(B), math.exp(-B)
    if kind == "huber_sqrt":
        return 1.0, 1.0, (1.0 + t * t) ** -1.5
    if kind == "huber_logcosh":
        return 1.0, 1.0, 1.0 - math.tanh(t) ** 2
    if kind == "cauchy":
        # dl/du is increasing in |t| up to sqrt(2)
        m = min(t, math.sqrt(2.0))
        return m / (1.0 + m * m / 2.0), 1.0, (1.0 - t * t / 2.0) / (1.0 + t * t / 2.0) ** 2
    if kind == "welsch":
        m = min(t, 1.0)
        return m * math.exp(-m * m / 2.0), 1.0, (1.0 - t * t) * math.exp(-t * t / 2.0)
    raise ValueError(kind)


@dataclass(frozen=True)
class LossSpec:
    """A loss from the supported list together with its domain half-width B.

    ``label_bound`` is B_Y, the bound on |v| used for the constants (for
    Poisson it bounds the counts).  Labels of the continuous losses are not
    range-checked, only required finite.
    """

    kind: str
    B: float | None = None
    label_bound: float | None = None
    M: float = field(init=False)
    L: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown loss {self.kind!r}; expected one of {KINDS}")
        B = self.B if self.B is not None else RESTRICTED_B.get(self.kind, DEFAULT_B)
        if B <= 0:
            raise ValueError("B must be positive")
        if self.kind in RESTRICTED_B and B > RESTRICTED_B[self.kind]:
            raise ValueError(f"{self.kind} loss requires B <= {RESTRICTED_B[self.kind]:.4g}")
        BY = self.label_bound if self.label_bound is not None else B
        object.__setattr__(self, "B", float(B))
        object.__setattr__(self, "label_bound", float(BY))
        M, L, mu = _constants(self.kind, B, BY)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "mu", mu)

    def check(self, u, v) -> None:
        u = np.asarray(u, dtype=float)
        if np.any(~(np.abs(u) <= self.B)):
            raise LossDomainError(f"prediction outside [-B, B] with B={self.B:.4g} ({self.kind})")
        v = np.asarray(v, dtype=float)
        if not np.all(np.isfinite(v)):
            raise InvalidLabelError("labels must be finite")
        if self.kind == "logistic" and not np.all(np.abs(v) == 1.0):
            raise InvalidLabelError("logistic labels must be -1 or +1")
        if self.kind == "poisson" and not np.all((v >= 0) & (v == np.floor(v))):
            raise InvalidLabelError("poisson labels must be non-negative integers")

    def value(self, u, v):
        return value(self, u, v)

    def derivative(self, u, v):
        return derivative(self, u, v)


def _xlogx(v):
    v = np.asarray(v, dtype=float)
    return np.where(v > 0, v * np.log(np.where(v > 0, v, 1.0)), 0.0)


def value(spec: LossSpec, u, v):
    """l(u, v).  Poisson is shifted by v - v log v so that it is >= 0."""
    spec.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    kind = spec.kind
    if kind == "l2":
        out = (u - v) ** 2
    elif kind == "logistic":
        out = np.logaddexp(0.0, -v * u)
    elif kind == "poisson":
        out = np.exp(u) - u * v - (v - _xlogx(v))
    elif kind == "huber_sqrt":
        out = np.sqrt((v - u) ** 2 + 1.0) - 1.0
    elif kind == "huber_logcosh":
        t = np.abs(v - u)
        # log cosh t = t + log1p(e^{-2t}) - log 2
        out = t + np.log1p(np.exp(-2.0 * t)) - math.log(2.0)
    elif kind == "cauchy":
        out = np.log1p((u - v) ** 2 / 2.0)
    else:
        out = -np.expm1(-((u - v) ** 2) / 2.0)
    out = np.maximum(out, 0.0)
    return out if out.ndim else float(out)


def _logistic_grad(z):
    # -v * sigmoid(-v u) with z = v u, sigmoid evaluated without overflow
    if z >= 0:
        e = math.exp(-z)
        return e / (1.0 + e)
    return 1.0 / (1.0 + math.exp(z))


def derivative_scalar(spec: LossSpec, u: float, v: float) -> float:
    """Fast float path of :func:`derivative` used inside the SGD loop."""
    B = spec.B
    if not -B <= u <= B:
        raise LossDomainError(f"prediction {u:.6g} outside [-B, B] with B={B:.4g} ({spec.kind})")
    kind = spec.kind
    if kind == "l2":
        return 2.0 * (u - v)
    if kind == "huber_sqrt":
        t = u - v
        return t / math.sqrt(t * t + 1.0)
    if kind == "cauchy":
        t = u - v
        return t / (1.0 + t * t / 2.0)
    if kind == "welsch":
        t = u - v
        return t * math.exp(-t * t / 2.0)
    if kind == "huber_logcosh":
        return math.tanh(u - v)
    if kind == "logistic":
        if v not in (-1.0, 1.0):
            raise InvalidLabelError("logistic labels must be -1 or +1")
        return -v * _logistic_grad(v * u)
    if kind == "poisson":
        return math.exp(u) - v
    raise ValueError(kind)


def scalar_derivative_fn(spec: LossSpec):
    """Return a float -> float closure of dl/du specialised to ``spec``
    (domain checked) for use in per-sample loops."""
    B = spec.B
    kind = spec.kind

    def check(u):
        if not -B <= u <= B:
            raise LossDomainError(f"prediction {u:.6g} outside [-B, B] with B={B:.4g} ({kind})")

    if kind == "l2":
        def fn(u, v):
            check(u)
            return 2.0 * (u - v)
    elif kind == "huber_sqrt":
        def fn(u, v):
            check(u)
            t = u - v
            return t / math.sqrt(t * t + 1.0)
    elif kind == "cauchy":
        def fn(u, v):
            check(u)
            t = u - v
            return t / (1.0 + t * t / 2.0)
    elif kind == "welsch":
        def fn(u, v):
            check(u)
            t = u - v
            return t * math.exp(-t * t / 2.0)
    else:
        def fn(u, v):
            return derivative_scalar(spec, u, v)
    return fn


def derivative(spec: LossSpec, u, v):
    """dl/du at (u, v)."""
    spec.check(u, v)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    kind = spec.kind
    if kind == "l2":
        out = 2.0 * (u - v)
    elif kind == "logistic":
        z = v * u
        # sigmoid(-z) computed from the side that does not overflow
        ez = np.exp(-np.abs(z))
        sig_neg = np.where(z >= 0, ez / (1.0 + ez), 1.0 / (1.0 + ez))
        out = -v * sig_neg
    elif kind == "poisson":
        out = np.exp(u) - v
    elif kind == "huber_sqrt":
        t = u - v
        out = t / np.sqrt(t * t + 1.0)
    elif kind == "huber_logcosh":
        out = np.tanh(u - v)
    elif kind == "cauchy":
        t = u - v
        out = t / (1.0 + t * t / 2.0)
    else:
        t = u - v
        out = t * np.exp(-t * t / 2.0)
    return out if out.ndim else float(out)


def make_loss(kind: str, B: float | None = None, label_bound: float | None = None) -> LossSpec:
    return LossSpec(kind, B, label_bound)
