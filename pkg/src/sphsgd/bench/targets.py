"""Regression targets f* in coefficient form, with exact pointwise values."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import zeta

from ..harmonics import dim_harmonic, dim_pi, eval_basis_batch
from ..kernel import CIRCLE_PAPER, POWER_OF_DIM, CoefficientSchedule, bernoulli_poly
from ..model import CoefficientVector

# circle targets keep degrees until the dropped energy is this small relative
CIRCLE_TAIL_REL = 1e-12


@dataclass(frozen=True)
class Target:
    """f* with its coefficients up to ``coef.L`` and the energy
    sum of f_{k,j}^2 over the degrees beyond that, which is known analytically."""

    name: str
    coef: CoefficientVector
    tail_energy: float
    values: Callable[[np.ndarray], np.ndarray]

    @property
    def d(self) -> int:
        return self.coef.d

    @property
    def energy(self) -> float:
        return math.fsum(self.coef.coef**2) + self.tail_energy


def circle_angle(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    return np.arctan2(X[:, 1], X[:, 0])


# (scale c, Bernoulli half-order m) for f* = c B_{2m}({theta / 2 pi})
CIRCLE_EXAMPLES = {1: (0.5, 2), 2: (0.2, 1)}


def _circle_cosine_amplitude(c: float, m: int) -> float:
    # B_{2m}({x}) = (-1)^(m+1) 2 (2m)! / (2 pi)^(2m) * sum_k cos(2 pi k x) / k^(2m)
    return c * (-1) ** (m + 1) * 2.0 * math.factorial(2 * m) / (2.0 * math.pi) ** (2 * m)


def circle_target_degree(m: int, rel: float = CIRCLE_TAIL_REL) -> int:
    """Smallest K with sum_{k>K} k^(-4m) <= rel * zeta(4m)."""
    total = zeta(4 * m)
    K = 1
    while zeta(4 * m, K + 1) > rel * total:
        K = max(K + 1, int(K * 1.1))
    lo, hi = max(1, int(K / 1.1) - 1), K
    while lo < hi:
        mid = (lo + hi) // 2
        if zeta(4 * m, mid + 1) > rel * total:
            lo = mid + 1
        else:
            hi = mid
    return lo


def make_target_circle(example: int, s: float = 1.0) -> Target:
    """Bernoulli-polynomial target of circle example 1 (0.5 B_4) or 2 (0.2 B_2).

    In the basis 1, sqrt2 cos k theta, sqrt2 sin k theta only the cosine
    entries are nonzero: beta_k / sqrt 2 with beta_k proportional to k^(-2m).
    """
    if example not in CIRCLE_EXAMPLES:
        raise ValueError(f"circle example must be 1 or 2, got {example}")
    c, m = CIRCLE_EXAMPLES[example]
    amp = _circle_cosine_amplitude(c, m)
    K = circle_target_degree(m)
    schedule = CoefficientSchedule(s, CIRCLE_PAPER, 2)
    f = CoefficientVector(schedule, K)
    k = np.arange(1, K + 1, dtype=float)
    f.coef[1::2] = amp / math.sqrt(2.0) * k ** (-2.0 * m)
    tail = 0.5 * amp * amp * float(zeta(4 * m, K + 1))

    def values(X):
        frac = np.mod(circle_angle(X) / (2.0 * math.pi), 1.0)
        return c * bernoulli_poly(2 * m, frac)

    return Target(f"circle{example}", f, tail, values)


SPHERE3_DEGREE = 10


def sphere3_coefficient(k: int, s: float = 1.0, r: float = 1.0) -> float:
    return 0.2 * dim_pi(3, k) ** (-0.501 - 2.0 * s * r)


def make_target_sphere3(s: float = 1.0, r: float = 1.0) -> Target:
    """0.2 (dim Pi_k^3)^(-0.501 - 2sr) on every harmonic of degree k <= 10."""
    schedule = CoefficientSchedule(s, POWER_OF_DIM, 3)
    blocks = [np.full(dim_harmonic(3, k), sphere3_coefficient(k, s, r)) for k in range(SPHERE3_DEGREE + 1)]
    f = CoefficientVector.from_blocks(schedule, blocks)

    def values(X):
        return eval_basis_batch(3, SPHERE3_DEGREE, np.atleast_2d(X)) @ f.coef

    return Target("sphere3", f, 0.0, values)


def make_target_zero(d: int, s: float = 1.0) -> Target:
    variant = CIRCLE_PAPER if d == 2 else POWER_OF_DIM
    f = CoefficientVector(CoefficientSchedule(s, variant, d), 0)

    def values(X):
        return np.zeros(len(np.atleast_2d(X)))

    return Target("zero", f, 0.0, values)


def make_target(name: str, d: int | None = None, s: float = 1.0, r: float | None = None) -> Target:
    if name in ("circle1", "circle2"):
        if d not in (None, 2):
            raise ValueError(f"{name} lives on S^1 (d=2)")
        return make_target_circle(int(name[-1]), s)
    if name == "sphere3":
        if d not in (None, 3):
            raise ValueError("sphere3 lives on S^2 (d=3)")
        return make_target_sphere3(s, 1.0 if r is None else r)
    if name == "zero":
        return make_target_zero(2 if d is None else d, s)
    raise ValueError(f"unknown target {name!r}; expected circle1, circle2, sphere3 or zero")


def l2_sq(f: CoefficientVector, target: Target) -> float:
    """||f - f*||^2_omega computed on coefficients, plus the analytic tail of f*."""
    a, b = f.coef, target.coef.coef
    m = min(a.size, b.size)
    diff = a[:m] - b[:m]
    parts = [np.dot(diff, diff), np.dot(a[m:], a[m:]), np.dot(b[m:], b[m:]), target.tail_energy]
    return math.fsum(float(p) for p in parts)
