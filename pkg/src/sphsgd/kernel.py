"""Kernel coefficient schedules, truncated zonal kernels and baseline kernels."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, zeta

from .harmonics import check_on_sphere, dim_harmonic, dim_pi, eval_basis_batch

POWER_OF_DIM = "power-of-dim"
CIRCLE_PAPER = "circle-paper"

# kappa^2 series: stop once the estimated tail is below this
KAPPA_TAIL_TOL = 1e-12
KAPPA_MAX_TERMS = 10**7


@dataclass(frozen=True)
class CoefficientSchedule:
    """Kernel weights a_k.

    ``power-of-dim``: a_k = (dim Pi_k^d)^(-2s), so A_1 = A_2 = 1.
    ``circle-paper``: a_0 = 1, a_k = (2k)^(-2s); d must be 2.  Here
    a_k (dim Pi_k^2)^(2s) = ((2k+1)/(2k))^(2s) lies in [1, (3/2)^(2s)].
    """

    s: float
    variant: str = POWER_OF_DIM
    d: int = 2

    def __post_init__(self):
        if not self.s > 0.5:
            raise ValueError(f"capacity parameter s must exceed 1/2, got {self.s}")
        if self.variant not in (POWER_OF_DIM, CIRCLE_PAPER):
            raise ValueError(f"unknown schedule variant {self.variant!r}")
        if self.variant == CIRCLE_PAPER and self.d != 2:
            raise ValueError("circle-paper schedule is defined on S^1 only (d=2)")
        if self.d < 2:
            raise ValueError("d must be >= 2")

    @property
    def bounds(self) -> tuple[float, float]:
        """(A_1, A_2) with A_2 dimPi^-2s <= a_k <= A_1 dimPi^-2s."""
        if self.variant == CIRCLE_PAPER:
            return 1.5 ** (2 * self.s), 1.0
        return 1.0, 1.0

    def coefficient(self, k: int) -> float:
        return coefficient(self, k)

    def degree_weights(self, L: int) -> np.ndarray:
        return _degree_weights(self, L).copy()

    def expanded(self, L: int) -> np.ndarray:
        """a_k repeated over each basis function of degree k (flat layout)."""
        return _expanded(self, L).copy()


def coefficient(schedule: CoefficientSchedule, k: int) -> float:
    if k < 0:
        raise ValueError("degree must be >= 0")
    if k == 0:
        return 1.0
    if schedule.variant == CIRCLE_PAPER:
        return float((2 * k) ** (-2.0 * schedule.s))
    return float(dim_pi(schedule.d, k) ** (-2.0 * schedule.s))


@lru_cache(maxsize=128)
def _degree_weights(schedule: CoefficientSchedule, L: int) -> np.ndarray:
    return np.array([coefficient(schedule, k) for k in range(L + 1)])


@lru_cache(maxsize=128)
def _expanded(schedule: CoefficientSchedule, L: int) -> np.ndarray:
    w = _degree_weights(schedule, L)
    return np.repeat(w, [dim_harmonic(schedule.d, k) for k in range(L + 1)])


def truncated_kernel(schedule: CoefficientSchedule, L: int, x, y) -> float:
    """K^T_L(x, y) = sum_{k<=L} a_k sum_j Y_{k,j}(x) Y_{k,j}(y)."""
    B = eval_basis_batch(schedule.d, L, np.vstack([x, y]))
    a = _expanded(schedule, L)
    return float(np.sum(a * B[0] * B[1]))


def _float_dim_pi(d: int, k: np.ndarray) -> np.ndarray:
    def comb(n, r):
        return np.exp(gammaln(n + 1) - gammaln(r + 1) - gammaln(n - r + 1))

    return comb(k + d - 1, d - 1) + comb(k + d - 2, d - 1)


def _float_dim_h(d: int, k: np.ndarray) -> np.ndarray:
    if d == 2:
        return np.full(k.shape, 2.0)
    return _float_dim_pi(d, k) - _float_dim_pi(d, k - 1)


@lru_cache(maxsize=32)
def kappa_sq(schedule: CoefficientSchedule) -> float:
    """sup_x K(x, x) = sum_k a_k dim H_k^d.

    On the circle schedule this is 1 + 2 (2)^(-2s) zeta(2s).  Otherwise the
    terms decay like k^-p with p = (2s-1)(d-1) + 1; the series is summed in
    blocks and the remainder after K terms is replaced by the midpoint
    integral t_K K^p (K + 1/2)^(1-p) / (p - 1).  That estimate has relative
    error O(1/K), so summation stops once tail / K < KAPPA_TAIL_TOL.
    """
    d, s = schedule.d, schedule.s
    if schedule.variant == CIRCLE_PAPER:
        return 1.0 + 2.0 * 4.0 ** (-s) * float(zeta(2.0 * s))
    p = (2 * s - 1) * (d - 1) + 1
    total = 1.0
    start, block = 1, 1024
    while True:
        k = np.arange(start, start + block, dtype=float)
        terms = _float_dim_pi(d, k) ** (-2 * s) * _float_dim_h(d, k)
        total += math.fsum(terms)
        K = k[-1]
        tail = terms[-1] * K * (K / (K + 0.5)) ** (p - 1) / (p - 1)
        if tail / K < KAPPA_TAIL_TOL:
            return total + tail
        start += block
        block = min(2 * block, 1 << 20)
        if start > KAPPA_MAX_TERMS:
            warnings.warn("kappa^2 series truncated before reaching tolerance", RuntimeWarning, stacklevel=2)
            return total + tail


# Bernoulli polynomials B_n(u), coefficients of u^0, u^1, ...
_BERNOULLI = {
    2: (Fraction(1, 6), Fraction(-1), Fraction(1)),
    4: (Fraction(-1, 30), Fraction(0), Fraction(1), Fraction(-2), Fraction(1)),
    6: (Fraction(1, 42), Fraction(0), Fraction(-1, 2), Fraction(0), Fraction(5, 2), Fraction(-3), Fraction(1)),
    8: (
        Fraction(-1, 30),
        Fraction(0),
        Fraction(2, 3),
        Fraction(0),
        Fraction(-7, 3),
        Fraction(0),
        Fraction(14, 3),
        Fraction(-4),
        Fraction(1),
    ),
}


def bernoulli_coefficients(order: int) -> tuple[Fraction, ...]:
    if order not in _BERNOULLI:
        raise ValueError(f"unsupported Bernoulli order {order}; use one of 2, 4, 6, 8")
    return _BERNOULLI[order]


def bernoulli_poly(order: int, u):
    coeffs = bernoulli_coefficients(order)
    u_arr = np.asarray(u, dtype=float)
    if np.any((u_arr < 0) | (u_arr > 1)):
        raise ValueError("Bernoulli polynomial argument must lie in [0, 1]")
    out = np.zeros_like(u_arr)
    for c in reversed(coeffs):
        out = out * u_arr + float(c)
    return out if out.ndim else float(out)


def circle_kernel_closed(s: int, theta, phi):
    """Closed form of 1 + sum_k 2 cos(k(theta-phi)) / (2k)^(2s).

    Equal to 1 + (-1)^(s+1) pi^(2s) / (2s)! * B_{2s}({(theta-phi)/2pi}).
    """
    if s not in (1, 2, 3, 4):
        raise ValueError("closed-form circle kernel supports s in {1, 2, 3, 4}")
    frac = np.mod((np.asarray(theta, dtype=float) - np.asarray(phi, dtype=float)) / (2 * math.pi), 1.0)
    const = (-1) ** (s + 1) * math.pi ** (2 * s) / math.factorial(2 * s)
    out = 1.0 + const * bernoulli_poly(2 * s, frac)
    return out


GAUSSIAN = "gaussian"
MATERN32 = "matern32"
MATERN52 = "matern52"
CIRCLE_BERNOULLI = "circle-bernoulli"


@dataclass(frozen=True)
class BaselineKernel:
    """Untruncated kernel for pairwise kernel SGD.

    ``gaussian`` is exp(-r^2 / (2 sigma^2)); the Matern kernels take r
    unscaled; ``circle-bernoulli`` is the closed-form circle kernel of order
    s evaluated on angles of points of S^1.
    """

    kind: str
    sigma: float = 1.0
    s: int = 1

    def __post_init__(self):
        if self.kind not in (GAUSSIAN, MATERN32, MATERN52, CIRCLE_BERNOULLI):
            raise ValueError(f"unknown baseline kernel {self.kind!r}")
        if self.sigma <= 0:
            raise ValueError("bandwidth must be positive")

    def row(self, x: np.ndarray, Y: np.ndarray) -> np.ndarray:
        """Kernel values between x (d,) and every row of Y (n, d)."""
        if self.kind == CIRCLE_BERNOULLI:
            sin_diff = x[1] * Y[:, 0] - x[0] * Y[:, 1]
            cos_diff = Y @ x
            return circle_kernel_closed(self.s, np.arctan2(sin_diff, cos_diff), 0.0)
        diff = Y - x
        rsq = np.einsum("ij,ij->i", diff, diff)
        if self.kind == GAUSSIAN:
            return np.exp(-rsq / (2.0 * self.sigma**2))
        r = np.sqrt(rsq)
        if self.kind == MATERN32:
            z = math.sqrt(3.0) * r
            return (1.0 + z) * np.exp(-z)
        z = math.sqrt(5.0) * r
        return (1.0 + z + z * z / 3.0) * np.exp(-z)

    def __call__(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return float(self.row(x, y[None, :])[0])


def baseline_kernel(kind: str, params: dict | None, x, y) -> float:
    return BaselineKernel(kind, **(params or {}))(x, y)


def gram(schedule: CoefficientSchedule, L: int, X: np.ndarray) -> np.ndarray:
    check_on_sphere(X)
    B = eval_basis_batch(schedule.d, L, X)
    return (B * _expanded(schedule, L)) @ B.T
