"""Truncated-kernel SGD over spherical-harmonic coefficients.

Each step evaluates the basis at the sample, takes one gradient step along
the truncated kernel section a_k Y_{k,j}(x) for all k <= L_n, and rescales
onto the RKHS ball of radius Q.  Only coefficients are stored.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .harmonics import check_on_sphere, dim_pi, eval_basis_batch
from .kernel import CIRCLE_PAPER, POWER_OF_DIM, CoefficientSchedule
from .loss import LossSpec, derivative_scalar, scalar_derivative_fn
from .model import CoefficientVector, SuffixAverager

CHUNK = 2048
REFRESH = 256
# n^theta is inexact in floating point (3125**0.2 > 5); exact ties must still resolve to k
TIE_RTOL = 1e-12


class StreamExhaustedError(RuntimeError):
    pass


@dataclass(frozen=True)
class SgdConfig:
    """Hyperparameters of one learner.

    ``max_degree`` optionally caps L_n (None: no cap).  ``schedule`` defaults
    to the circle-paper weights on S^1 and power-of-dim otherwise.
    """

    d: int
    loss: LossSpec
    s: float = 1.0
    theta: float = 0.2
    t: float = 0.5
    gamma0: float = 1.0
    log_factor: bool = False
    Q: float = 1.0
    alpha: float = 0.5
    seed: int = 0
    schedule: CoefficientSchedule | None = None
    max_degree: int | None = None

    def __post_init__(self):
        if not 0 < self.theta < 0.5:
            raise ValueError(f"theta must lie in (0, 1/2), got {self.theta}")
        if not 0.5 <= self.t < 1:
            raise ValueError(f"t must lie in [1/2, 1), got {self.t}")
        if not 0 < self.alpha <= 1:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.Q <= 0 or self.gamma0 <= 0:
            raise ValueError("Q and gamma0 must be positive")
        if self.schedule is None:
            variant = CIRCLE_PAPER if self.d == 2 else POWER_OF_DIM
            object.__setattr__(self, "schedule", CoefficientSchedule(self.s, variant, self.d))
        elif self.schedule.d != self.d:
            raise ValueError("schedule dimension does not match d")

    @classmethod
    def from_regularity(cls, d: int, loss: LossSpec, s: float, r: float, **kw) -> "SgdConfig":
        """theta = 1/(2s(2r+1)), t = 2r/(2r+1), log factor on unless overridden."""
        kw.setdefault("log_factor", True)
        return cls(d=d, loss=loss, s=s, theta=1.0 / (2 * s * (2 * r + 1)), t=2 * r / (2 * r + 1), **kw)


def truncation_level(config: SgdConfig, n: int, start: int = 0) -> int:
    """Smallest k with dim_pi(d, k) >= n^theta (searching upward from start)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    target = n**config.theta * (1.0 - TIE_RTOL)
    k = start
    while dim_pi(config.d, k) < target:
        k += 1
    if config.max_degree is not None:
        k = min(k, config.max_degree)
    return k


def step_size(config: SgdConfig, n: int) -> float:
    g = config.gamma0 * n ** (-config.t)
    if config.log_factor:
        g *= math.log(n + 1)
    return g


@dataclass
class Snapshot:
    n: int
    L: int
    last: CoefficientVector
    suffix: CoefficientVector | None
    wall_time: float
    basis_evals: int


@dataclass
class LearnerState:
    config: SgdConfig
    n: int = 0
    L: int = 0
    f_hat: CoefficientVector = None
    averagers: dict[int, SuffixAverager] = field(default_factory=dict)
    basis_evals: int = 0
    projections: int = 0

    def __post_init__(self):
        if self.f_hat is None:
            self.f_hat = CoefficientVector(self.config.schedule, 0)

    @property
    def coefficient_count(self) -> int:
        return self.f_hat.coef.size


class TKernelSGD:
    """Online learner.  ``checkpoints`` fixes the sample sizes at which
    alpha-suffix averages are wanted; each gets its own window accumulator."""

    def __init__(self, config: SgdConfig, checkpoints: Iterable[int] = ()):
        self.config = config
        self.state = LearnerState(config)
        self._a = config.schedule.expanded(0)
        self._averagers = sorted(
            (SuffixAverager(config.alpha, n, config.schedule) for n in set(checkpoints)),
            key=lambda av: av.start,
        )
        for av in self._averagers:
            self.state.averagers[av.n_final] = av
        self._feed(0)

    @property
    def n(self) -> int:
        return self.state.n

    @property
    def L(self) -> int:
        return self.state.L

    @property
    def f_hat(self) -> CoefficientVector:
        return self.state.f_hat

    def _wanted(self, lo: int, hi: int) -> list[SuffixAverager]:
        """Averagers whose window meets iterate indices lo..hi."""
        return [av for av in self._averagers if av.start <= hi and lo < av.n_final]

    def _feed(self, index: int) -> None:
        f = self.state.f_hat
        for av in self._wanted(index, index):
            av.add(f.coef, f.L, index)

    def _grow(self, L: int) -> None:
        self.state.f_hat.grow_to(L)
        self.state.L = L
        self._a = self.config.schedule.expanded(L)

    def _update(self, b: np.ndarray, y: float) -> None:
        """One step given basis values b at the current L_n."""
        st = self.state
        cfg = self.config
        coef = st.f_hat.coef
        pred = float(np.dot(coef, b))
        grad = derivative_scalar(cfg.loss, pred, y)
        if grad != 0.0:
            coef -= (step_size(cfg, st.n) * grad) * (self._a * b)
        nsq = float(np.dot(coef * coef, 1.0 / self._a)) if grad != 0.0 else None
        if nsq is not None and nsq > cfg.Q * cfg.Q:
            coef *= cfg.Q / math.sqrt(nsq)
            st.projections += 1
        st.basis_evals += b.size
        self._feed(st.n)

    def step(self, x, y) -> None:
        """Process one sample (x on the sphere)."""
        x = np.asarray(x, dtype=float)
        check_on_sphere(x[None, :])
        st = self.state
        st.n += 1
        L = truncation_level(self.config, st.n, st.L)
        if L > st.L:
            self._grow(L)
        b = eval_basis_batch(self.config.d, st.L, x[None, :])[0]
        self._update(b, float(y))

    def _levels(self, n0: int, m: int) -> np.ndarray:
        ns = np.arange(n0 + 1, n0 + m + 1, dtype=float)
        target = ns**self.config.theta * (1.0 - TIE_RTOL)
        top = truncation_level(self.config, n0 + m, self.state.L)
        dims = np.array([dim_pi(self.config.d, k) for k in range(top + 1)], dtype=float)
        # first k with dim_pi(d, k) >= n^theta, same comparison as truncation_level
        out = np.searchsorted(dims, target, side="left")
        return np.maximum(np.minimum(out, top), self.state.L)

    def run_chunk(self, X: np.ndarray, Y: np.ndarray) -> None:
        """Process consecutive samples; basis values are batch-evaluated per
        run of constant truncation level."""
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        m = len(Y)
        levels = self._levels(self.state.n, m)
        i = 0
        while i < m:
            L = int(levels[i])
            j = i
            while j < m and levels[j] == L:
                j += 1
            if L > self.state.L:
                self._grow(L)
            self._sweep(eval_basis_batch(self.config.d, L, X[i:j]), Y[i:j])
            i = j

    def _sweep(self, B: np.ndarray, Y: np.ndarray) -> None:
        # Fixed-L inner loop.  With c = gamma_n * grad and b = Y(x_n):
        #   ||f - c a b||_K^2 = ||f||_K^2 - 2 c f(x_n) + c^2 K_L(x_n, x_n),
        # so the squared norm is carried along and refreshed exactly on
        # projection and every REFRESH steps.
        st = self.state
        cfg = self.config
        a = self._a
        inv_a = 1.0 / a
        AB = B * a
        diag = np.einsum("ij,ij->i", AB, B).tolist()
        n0 = st.n
        ns = np.arange(n0 + 1, n0 + len(Y) + 1, dtype=float)
        gam = cfg.gamma0 * ns ** (-cfg.t)
        if cfg.log_factor:
            gam *= np.log(ns + 1.0)
        gam = gam.tolist()
        ys = Y.tolist()
        coef = st.f_hat.coef
        Q2 = cfg.Q * cfg.Q
        deriv = scalar_derivative_fn(cfg.loss)
        nsq = float(np.dot(coef * coef, inv_a))
        dot = np.dot
        projections = 0
        wanted = self._wanted(n0 + 1, n0 + len(ys))
        hist = np.empty((len(ys), coef.size)) if wanted else None
        for r in range(len(ys)):
            n = n0 + r + 1
            st.n = n
            pred = float(dot(coef, B[r]))
            g = deriv(pred, ys[r])
            if g != 0.0:
                c = gam[r] * g
                coef -= c * AB[r]
                nsq = nsq - 2.0 * c * pred + c * c * diag[r]
                if nsq > Q2 or n % REFRESH == 0:
                    nsq = float(dot(coef * coef, inv_a))
                    if nsq > Q2:
                        coef *= cfg.Q / math.sqrt(nsq)
                        nsq = Q2
                        projections += 1
            if hist is not None:
                hist[r] = coef
        for av in wanted:
            av.add_block(hist, st.L, n0 + 1)
        st.projections += projections
        st.basis_evals += B.size

    def snapshot(self, wall_time: float = 0.0) -> Snapshot:
        st = self.state
        av = st.averagers.get(st.n)
        suffix = av.result() if av is not None and av.count else None
        return Snapshot(st.n, st.L, st.f_hat.copy(), suffix, wall_time, st.basis_evals)


def sgd_step(learner: TKernelSGD, x, y) -> None:
    learner.step(x, y)


def _chunks(stream, size: int):
    if isinstance(stream, tuple) and len(stream) == 2 and isinstance(stream[0], np.ndarray):
        X, Y = stream
        for i in range(0, len(Y), size):
            yield X[i:i + size], Y[i:i + size]
        return
    xs, ys = [], []
    for x, y in stream:
        xs.append(x)
        ys.append(y)
        if len(ys) == size:
            yield np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
            xs, ys = [], []
    if ys:
        yield np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)


def run_stream(config: SgdConfig, stream, checkpoints: Iterable[int] = (), learner: TKernelSGD | None = None) -> list[Snapshot]:
    """Run over ``stream`` (an iterable of (x, y) or a tuple (X, Y) of arrays)
    and return one snapshot per checkpoint.  With no checkpoints the whole
    stream is consumed."""
    checkpoints = list(checkpoints)
    if checkpoints != sorted(checkpoints):
        raise ValueError("checkpoints must be sorted ascending")
    learner = learner or TKernelSGD(config, checkpoints)
    todo = list(dict.fromkeys(checkpoints))
    out: list[Snapshot] = []
    wall = 0.0
    for X, Y in _chunks(stream, CHUNK):
        pos = 0
        while pos < len(Y):
            if todo:
                room = todo[0] - learner.n
                take = min(room, len(Y) - pos)
            else:
                take = len(Y) - pos
            t0 = time.perf_counter()
            learner.run_chunk(X[pos:pos + take], Y[pos:pos + take])
            wall += time.perf_counter() - t0
            pos += take
            if todo and learner.n == todo[0]:
                out.append(learner.snapshot(wall))
                todo.pop(0)
        if not todo and checkpoints:
            break
    if todo:
        raise StreamExhaustedError(f"stream ended at n={learner.n} before checkpoint {todo[0]}")
    return out
