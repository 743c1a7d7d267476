"""Real orthonormal spherical harmonics on S^{d-1}.

The basis of H_k^d is indexed by pairs (alpha, i) with alpha a multi-index
of length d-1 and |alpha| = k, i in {0, 1} selecting the real (cosine-like)
or imaginary (sine-like) part of the bottom trigonometric factor.

Ordering within a degree is frozen: lexicographic on alpha, cosine part
before sine part.  Coefficient files depend on this order.

Inner products are taken against the normalized surface measure, so the
constant harmonic is Y_{0,1} = 1.

For d = 2 the basis is the trigonometric system
``1, sqrt(2) cos(k t), sqrt(2) sin(k t)`` with x = (cos t, sin t).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

ON_SPHERE_TOL = 1e-9
# rows per block in batch evaluation; bounds the (basis, L, rows) temporaries
EVAL_ROWS = 8192
# exp() of a log-gamma sum this large is outside double range
LOG_MAGNITUDE_WARN = 600.0
_INDEX_LIMIT = 2**63 - 1


class NotOnSphereError(ValueError):
    pass


class PrecisionWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class MultiIndex:
    alpha: tuple[int, ...]
    trig_part: int = 0

    def __post_init__(self):
        if any(a < 0 for a in self.alpha):
            raise ValueError(f"negative entry in multi-index {self.alpha}")
        if self.trig_part not in (0, 1):
            raise ValueError("trig_part must be 0 (cos) or 1 (sin)")
        if self.trig_part == 1 and (not self.alpha or self.alpha[-1] < 1):
            raise ValueError("sine part requires alpha[-1] >= 1")

    @property
    def degree(self) -> int:
        return sum(self.alpha)


def _check_dim(d: int, k: int) -> None:
    if d < 2:
        raise ValueError(f"sphere dimension d must be >= 2, got {d}")
    if k < 0:
        raise ValueError(f"degree must be >= 0, got {k}")


def _checked(value: int) -> int:
    if value > _INDEX_LIMIT:
        raise OverflowError("dimension does not fit in a 64-bit index")
    return value


def dim_harmonic(d: int, k: int) -> int:
    """Dimension of H_k^d: C(k+d-1, d-1) - C(k+d-3, d-1)."""
    _check_dim(d, k)
    sub = math.comb(k + d - 3, d - 1) if k >= 2 else 0
    return _checked(math.comb(k + d - 1, d - 1) - sub)


def dim_pi(d: int, k: int) -> int:
    """Dimension of the polynomials of degree <= k restricted to S^{d-1}."""
    _check_dim(d, k)
    prev = math.comb(k + d - 2, d - 1) if k >= 1 else 0
    return _checked(math.comb(k + d - 1, d - 1) + prev)


def gegenbauer(k: int, lam: float, u):
    """C_k^lam(u) by the forward three-term recurrence. Accepts arrays."""
    if lam <= 0:
        raise ValueError("Gegenbauer parameter must be positive")
    u = np.asarray(u, dtype=float)
    prev = np.ones_like(u)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 2.0 * lam * u
    for n in range(1, k):
        prev, cur = cur, (2.0 * (n + lam) * u * cur - (n + 2.0 * lam - 1.0) * prev) / (n + 1)
    return cur if cur.ndim else float(cur)


def _compositions(k: int, parts: int):
    # lexicographic order on the tuple
    if parts == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, parts - 1):
            yield (first,) + rest


@lru_cache(maxsize=256)
def _enumerate(d: int, k: int) -> tuple[MultiIndex, ...]:
    out = []
    for alpha in _compositions(k, d - 1):
        out.append(MultiIndex(alpha, 0))
        if alpha[-1] >= 1:
            out.append(MultiIndex(alpha, 1))
    return tuple(out)


def enumerate_basis(d: int, k: int) -> list[MultiIndex]:
    """All (alpha, i) of degree k, lexicographic on alpha, cos before sin."""
    _check_dim(d, k)
    return list(_enumerate(d, k))


def _lambdas(d: int, alpha: tuple[int, ...]) -> list[float]:
    # lambda_j for j = 1..d-2 (1-based), stored 0-based
    lams = []
    for j in range(1, d - 1):
        lams.append((d - j - 1) / 2.0 + sum(alpha[j:]))
    return lams


def _log_surface_area(d: int) -> float:
    # area of S^{d-1} = 2 pi^{d/2} / Gamma(d/2)
    return math.log(2.0) + 0.5 * d * math.log(math.pi) - math.lgamma(0.5 * d)


def normalization_constant(d: int, idx: MultiIndex) -> float:
    """Factor h making h * (product formula) unit-norm in L^2 of the
    normalized surface measure.  Evaluated in log space."""
    if len(idx.alpha) != d - 1:
        raise ValueError(f"multi-index length {len(idx.alpha)} does not match d-1={d - 1}")
    if idx.degree == 0:
        return 1.0
    bottom = idx.alpha[-1]
    log_inv_sq = math.log(math.pi if bottom > 0 else 2.0 * math.pi) - _log_surface_area(d)
    peak = 0.0
    for a, lam in zip(idx.alpha[:-1], _lambdas(d, idx.alpha)):
        terms = (
            math.lgamma(a + 2.0 * lam),
            -math.lgamma(a + 1.0),
            -2.0 * math.lgamma(lam),
        )
        peak = max(peak, max(abs(t) for t in terms))
        log_inv_sq += (
            math.log(math.pi)
            + (1.0 - 2.0 * lam) * math.log(2.0)
            + sum(terms)
            - math.log(lam + a)
        )
    if peak > LOG_MAGNITUDE_WARN:
        warnings.warn(
            f"log-gamma magnitude {peak:.1f} in normalization for d={d}; "
            "result may have lost precision",
            PrecisionWarning,
            stacklevel=2,
        )
    return math.exp(-0.5 * log_inv_sq)


@dataclass(frozen=True)
class _Plan:
    d: int
    L: int
    h: np.ndarray  # (nb,)
    bottom: np.ndarray  # alpha_{d-1}
    part: np.ndarray  # 0 / 1
    # padded gegenbauer factor lookups, shape (nb, L)
    level: np.ndarray
    tail: np.ndarray
    order: np.ndarray


@lru_cache(maxsize=64)
def _plan(d: int, L: int) -> _Plan:
    h, bottom, part, level, tail, order = [], [], [], [], [], []
    width = max(L, 1)
    pad_level = max(d - 2, 0)  # slot filled with ones
    for k in range(L + 1):
        for idx in _enumerate(d, k):
            h.append(normalization_constant(d, idx))
            bottom.append(idx.alpha[-1])
            part.append(idx.trig_part)
            lv, tl, od = [], [], []
            for j0 in range(d - 2):
                a = idx.alpha[j0]
                if a > 0:
                    lv.append(j0)
                    tl.append(sum(idx.alpha[j0 + 1:]))
                    od.append(a)
            while len(lv) < width:
                lv.append(pad_level)
                tl.append(0)
                od.append(0)
            level.append(lv)
            tail.append(tl)
            order.append(od)
    arr = lambda v: np.asarray(v, dtype=np.intp)  # noqa: E731
    return _Plan(d, L, np.asarray(h), arr(bottom), arr(part), arr(level), arr(tail), arr(order))


def check_on_sphere(X: np.ndarray) -> None:
    norms = np.linalg.norm(X, axis=-1)
    bad = np.abs(norms - 1.0) > ON_SPHERE_TOL
    if np.any(bad):
        worst = float(np.max(np.abs(norms - 1.0)))
        raise NotOnSphereError(f"input not on the unit sphere (|norm-1| = {worst:.3g})")


def _eval_circle(L: int, X: np.ndarray) -> np.ndarray:
    n = X.shape[0]
    out = np.empty((n, 2 * L + 1))
    out[:, 0] = 1.0
    c, s = np.ones(n), np.zeros(n)
    x1, x2 = X[:, 0], X[:, 1]
    root2 = math.sqrt(2.0)
    for k in range(1, L + 1):
        # (x1 + i x2)^k = cos(k t) + i sin(k t)
        c, s = c * x1 - s * x2, c * x2 + s * x1
        out[:, 2 * k - 1] = root2 * c
        out[:, 2 * k] = root2 * s
    return out


def eval_basis_batch(d: int, L: int, X) -> np.ndarray:
    """Evaluate every Y_{k,j}, k <= L, at each row of X.

    Returns an array of shape (N, dim_pi(d, L)) in enumeration order.
    """
    _check_dim(d, L)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != d:
        raise ValueError(f"expected points in R^{d}, got shape {X.shape}")
    check_on_sphere(X)
    if d == 2:
        return _eval_circle(L, X)
    if X.shape[0] > EVAL_ROWS:
        return np.vstack([_eval_product(d, L, X[i:i + EVAL_ROWS]) for i in range(0, X.shape[0], EVAL_ROWS)])
    return _eval_product(d, L, X)


def _eval_product(d: int, L: int, X: np.ndarray) -> np.ndarray:
    plan = _plan(d, L)
    n = X.shape[0]
    partial = np.cumsum(X * X, axis=1)  # r_m^2 = x_1^2 + ... + x_m^2

    # G[j0, tail, a] = r_m^a C_a^{lam}(x_m / r_m), m = d - j0 (1-based),
    # via the homogeneous recurrence so r_m = 0 needs no special case
    G = np.zeros((d - 1, L + 1, L + 1, n))
    G[d - 2] = 1.0
    for j0 in range(d - 2):
        m = d - 1 - j0  # 0-based column of x_m
        xm, rsq = X[:, m], partial[:, m]
        for tau in range(L + 1):
            lam = (d - j0 - 2) / 2.0 + tau
            G[j0, tau, 0] = 1.0
            if tau < L:
                G[j0, tau, 1] = 2.0 * lam * xm
            for a in range(1, L - tau):
                G[j0, tau, a + 1] = (
                    2.0 * (a + lam) * xm * G[j0, tau, a] - (a + 2.0 * lam - 1.0) * rsq * G[j0, tau, a - 1]
                ) / (a + 1)

    # bottom factor: real / imaginary part of (x_2 + i x_1)^p
    T = np.empty((L + 1, 2, n))
    c, s = np.ones(n), np.zeros(n)
    x1, x2 = X[:, 0], X[:, 1]
    for p in range(L + 1):
        T[p, 0], T[p, 1] = c, s
        c, s = c * x2 - s * x1, c * x1 + s * x2

    vals = T[plan.bottom, plan.part] * plan.h[:, None]
    vals *= np.prod(G[plan.level, plan.tail, plan.order], axis=1)
    return vals.T.copy()


def degree_offsets(d: int, L: int) -> np.ndarray:
    """Start offset of each degree block in the flat layout, plus the total."""
    return np.array([0] + [dim_pi(d, k) for k in range(L + 1)], dtype=np.intp)


@dataclass(frozen=True)
class BasisEvaluation:
    point: np.ndarray
    d: int
    L: int
    values: np.ndarray  # flat, enumeration order

    @property
    def degree_blocks(self) -> list[np.ndarray]:
        off = degree_offsets(self.d, self.L)
        return [self.values[off[k]:off[k + 1]] for k in range(self.L + 1)]


def eval_basis(d: int, L: int, x) -> BasisEvaluation:
    x = np.asarray(x, dtype=float)
    values = eval_basis_batch(d, L, x[None, :])[0]
    return BasisEvaluation(point=x.copy(), d=d, L=L, values=values)


def zonal_sum(d: int, k: int, x, y) -> float:
    """sum_j Y_{k,j}(x) Y_{k,j}(y), the reproducing kernel of H_k^d."""
    bx = eval_basis_batch(d, k, np.asarray(x)[None, :])[0]
    by = eval_basis_batch(d, k, np.asarray(y)[None, :])[0]
    lo = dim_pi(d, k - 1) if k > 0 else 0
    return float(np.dot(bx[lo:], by[lo:]))
