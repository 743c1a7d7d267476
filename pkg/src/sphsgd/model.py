"""Coefficient-space functions on the sphere: norms, evaluation, projection,
suffix averaging and the CSV coefficient dump."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from .harmonics import BasisEvaluation, degree_offsets, dim_harmonic, dim_pi
from .kernel import CoefficientSchedule


PROJECTION_SLACK = 1e-14


class DegreeMismatchError(ValueError):
    pass


class CoefficientVector:
    """Expansion coefficients f_{k,j} of a function in H_L, stored flat in
    enumeration order (degree blocks concatenated)."""

    def __init__(self, schedule: CoefficientSchedule, L: int = 0, coef=None):
        self.schedule = schedule
        self.L = int(L)
        size = dim_pi(schedule.d, self.L)
        if coef is None:
            self.coef = np.zeros(size)
        else:
            self.coef = np.array(coef, dtype=float)
            if self.coef.shape != (size,):
                raise DegreeMismatchError(f"expected {size} coefficients for L={L}, got {self.coef.shape}")

    @property
    def d(self) -> int:
        return self.schedule.d

    @property
    def degree_blocks(self) -> list[np.ndarray]:
        off = degree_offsets(self.d, self.L)
        return [self.coef[off[k]:off[k + 1]] for k in range(self.L + 1)]

    def grow_to(self, L: int) -> None:
        """Append zero blocks up to degree L (never shrinks)."""
        if L > self.L:
            self.coef = np.concatenate([self.coef, np.zeros(dim_pi(self.d, L) - self.coef.size)])
            self.L = L

    def padded(self, L: int) -> np.ndarray:
        """Flat coefficients zero-padded (or truncated) to degree L."""
        n = dim_pi(self.d, L)
        if n <= self.coef.size:
            return self.coef[:n].copy()
        return np.concatenate([self.coef, np.zeros(n - self.coef.size)])

    def copy(self) -> "CoefficientVector":
        return CoefficientVector(self.schedule, self.L, self.coef)

    def __repr__(self):
        return f"CoefficientVector(d={self.d}, L={self.L}, rkhs_norm={math.sqrt(rkhs_norm_sq(self)):.4g})"

    @classmethod
    def from_blocks(cls, schedule: CoefficientSchedule, blocks) -> "CoefficientVector":
        blocks = [np.asarray(b, dtype=float) for b in blocks]
        for k, b in enumerate(blocks):
            if b.shape != (dim_harmonic(schedule.d, k),):
                raise DegreeMismatchError(f"block {k} has length {b.size}, expected {dim_harmonic(schedule.d, k)}")
        return cls(schedule, len(blocks) - 1, np.concatenate(blocks))


def evaluate(f: CoefficientVector, basis_eval: BasisEvaluation) -> float:
    if basis_eval.d != f.d or basis_eval.L < f.L:
        raise DegreeMismatchError(f"basis (d={basis_eval.d}, L={basis_eval.L}) does not cover f (d={f.d}, L={f.L})")
    return float(np.dot(f.coef, basis_eval.values[: f.coef.size]))


def evaluate_many(f: CoefficientVector, basis_matrix: np.ndarray) -> np.ndarray:
    """Values at many points given a (N, >= dim_pi(d, L)) basis matrix."""
    if basis_matrix.shape[1] < f.coef.size:
        raise DegreeMismatchError("basis matrix does not cover the coefficient degrees")
    return basis_matrix[:, : f.coef.size] @ f.coef


def rkhs_norm_sq(f: CoefficientVector) -> float:
    a = f.schedule.expanded(f.L)
    return math.fsum(f.coef * f.coef / a)


def l2_norm_sq(f: CoefficientVector) -> float:
    return math.fsum(f.coef * f.coef)


def project_to_ball(f: CoefficientVector, Q: float) -> CoefficientVector:
    """Radial projection onto {||f||_K <= Q}."""
    if Q <= 0:
        raise ValueError("ball radius must be positive")
    norm = math.sqrt(rkhs_norm_sq(f))
    # a rescaled vector can land a few ulps above Q; keep it fixed
    if norm <= Q * (1.0 + PROJECTION_SLACK):
        return f.copy()
    return CoefficientVector(f.schedule, f.L, f.coef * (Q / norm))


def suffix_start(alpha: float, n: int) -> int:
    """First iterate index of the alpha-suffix window for a run of n samples.

    The window is f_start, ..., f_{n-1}.  When alpha * n < 1 the formula
    gives an empty window; it is widened to the single iterate f_{n-1}.
    """
    if not 0 < alpha <= 1:
        raise ValueError("alpha must lie in (0, 1]")
    start = math.ceil(round((1.0 - alpha) * n, 9))
    return min(start, max(n - 1, 0))


class SuffixAverager:
    """Running mean of iterates f_i with suffix_start(alpha, n_final) <= i < n_final.

    Sums are Kahan-compensated.
    """

    def __init__(self, alpha: float, n_final: int, schedule: CoefficientSchedule):
        if n_final < 1:
            raise ValueError("n_final must be >= 1")
        self.alpha = alpha
        self.n_final = int(n_final)
        self.start = suffix_start(alpha, self.n_final)
        self.schedule = schedule
        self.count = 0
        self.last_index = -1
        self._sum = np.zeros(1)
        self._comp = np.zeros(1)
        self._L = 0

    @property
    def active(self) -> bool:
        return self.last_index < self.n_final - 1

    def wants(self, index: int) -> bool:
        return self.start <= index < self.n_final

    def update(self, iterate: CoefficientVector, index: int) -> None:
        self.add(iterate.coef, iterate.L, index)

    def add(self, x: np.ndarray, L: int, index: int) -> None:
        """Low-level :meth:`update` on a flat coefficient array of degree L."""
        if index <= self.last_index:
            raise ValueError(f"iterate index {index} arrived after {self.last_index}")
        self.last_index = index
        if self.wants(index):
            self._accumulate(x, L, 1)

    def add_block(self, rows: np.ndarray, L: int, first_index: int) -> None:
        """Feed consecutive iterates first_index, first_index+1, ... given as
        the rows of ``rows``; rows outside the window are skipped."""
        last = first_index + len(rows) - 1
        if first_index <= self.last_index:
            raise ValueError(f"iterate index {first_index} arrived after {self.last_index}")
        self.last_index = last
        lo = max(self.start, first_index)
        hi = min(self.n_final - 1, last)
        if lo > hi:
            return
        block = rows[lo - first_index:hi - first_index + 1]
        self._accumulate(block.sum(axis=0), L, len(block))

    def _accumulate(self, x: np.ndarray, L: int, count: int) -> None:
        if L > self._L or self.count == 0:
            self._grow(L)
        m = x.size
        s, c = self._sum[:m], self._comp[:m]
        y = x - c
        t = s + y
        self._comp[:m] = (t - s) - y
        self._sum[:m] = t
        self.count += count

    def _grow(self, L: int) -> None:
        L = max(L, self._L)
        n = dim_pi(self.schedule.d, L)
        if n > self._sum.size:
            self._sum = np.concatenate([self._sum, np.zeros(n - self._sum.size)])
            self._comp = np.concatenate([self._comp, np.zeros(n - self._comp.size)])
        self._L = L

    def result(self) -> CoefficientVector:
        if self.count == 0:
            raise ValueError("suffix window is empty")
        n = dim_pi(self.schedule.d, self._L)
        return CoefficientVector(self.schedule, self._L, self._sum[:n] / self.count)


def suffix_update(avg: SuffixAverager, iterate: CoefficientVector, n: int) -> None:
    avg.update(iterate, n)


def dump_csv(f: CoefficientVector, path) -> None:
    """Write columns k, j, coefficient; j is 1-based within the degree block.

    ``path`` may also be an open text stream.
    """
    if hasattr(path, "write"):
        _write_rows(f, path)
        return
    with Path(path).open("w", newline="") as fh:
        _write_rows(f, fh)


def _write_rows(f: CoefficientVector, fh) -> None:
    w = csv.writer(fh)
    w.writerow(["k", "j", "coefficient"])
    for k, block in enumerate(f.degree_blocks):
        for j, c in enumerate(block, start=1):
            w.writerow([k, j, repr(float(c))])


def load_csv(path, schedule: CoefficientSchedule) -> CoefficientVector:
    rows = []
    with Path(path).open(newline="") as fh:
        for row in csv.DictReader(fh):
            rows.append((int(row["k"]), int(row["j"]), float(row["coefficient"])))
    L = max(k for k, _, _ in rows) if rows else 0
    f = CoefficientVector(schedule, L)
    off = degree_offsets(schedule.d, L)
    for k, j, c in rows:
        if not 1 <= j <= dim_harmonic(schedule.d, k):
            raise DegreeMismatchError(f"index j={j} out of range for degree {k}")
        f.coef[off[k] + j - 1] = c
    return f
