"""Classical kernel SGD, g_n = g_{n-1} - gamma_n dl(g_{n-1}(X_n), Y_n) K(X_n, .).

The iterate is the expansion g_n = sum_i w_i K(X_i, .) over every sample
seen, so step n costs n kernel evaluations and memory grows linearly.
"""

from __future__ import annotations

import logging
import math

import numpy as np

from .kernel import BaselineKernel
from .loss import RESTRICTED_B, LossSpec, derivative_scalar

log = logging.getLogger(__name__)


class SupportExpansion:
    """Stored inputs and weights of the pairwise expansion.

    ``kernel_evals`` counts kernel evaluations made by steps: step n
    evaluates the kernel row of X_n against all n stored points, its own
    diagonal included (used for the running RKHS norm), so after n steps the
    counter is n(n+1)/2.
    """

    def __init__(self, kernel: BaselineKernel, d: int, capacity: int = 1024, polyak: bool = True):
        self.kernel = kernel
        self.d = d
        self.polyak = polyak
        self._points = np.empty((capacity, d))
        self._weights = np.empty(capacity)
        self.n = 0
        self.kernel_evals = 0
        self.norm_sq = 0.0
        self.clamps = 0

    @property
    def points(self) -> np.ndarray:
        return self._points[: self.n]

    @property
    def weights(self) -> np.ndarray:
        return self._weights[: self.n]

    @property
    def averaged_weights(self) -> np.ndarray:
        """Weights of the Polyak average (g_1 + ... + g_n) / n.

        Point i enters g_i, ..., g_n, so its averaged weight is
        w_i (n - i + 1) / n.
        """
        if self.n == 0:
            return np.empty(0)
        i = np.arange(1, self.n + 1)
        return self.weights * (self.n - i + 1) / self.n

    def _append(self, x: np.ndarray) -> None:
        if self.n == len(self._weights):
            cap = 2 * len(self._weights)
            self._points = np.concatenate([self._points, np.empty((cap - self.n, self.d))])
            self._weights = np.concatenate([self._weights, np.empty(cap - self.n)])
        self._points[self.n] = x
        self._weights[self.n] = 0.0
        self.n += 1

    def predict(self, x, averaged: bool = False) -> float:
        if self.n == 0:
            return 0.0
        x = np.asarray(x, dtype=float)
        w = self.averaged_weights if averaged else self.weights
        return float(np.dot(w, self.kernel.row(x, self.points)))

    def predict_many(self, X: np.ndarray, averaged: bool = False, block: int = 512) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.zeros(len(X))
        if self.n == 0:
            return out
        w = self.averaged_weights if averaged else self.weights
        for i, x in enumerate(X):
            out[i] = np.dot(w, self.kernel.row(x, self.points))
        return out


def predict(state: SupportExpansion, x) -> float:
    return state.predict(x)


def baseline_step(state: SupportExpansion, x, y: float, gamma_n: float, loss: LossSpec) -> float:
    """Append X_n with weight -gamma_n dl(g_{n-1}(X_n), y).  Returns the weight.

    Losses with a restricted domain get their prediction clamped into
    [-B, B] first, since nothing keeps the unprojected iterate bounded.
    """
    x = np.asarray(x, dtype=float)
    state._append(x)
    row = state.kernel.row(x, state.points)
    state.kernel_evals += state.n
    w = state.weights
    pred = float(np.dot(w[:-1], row[:-1]))
    if loss.kind in RESTRICTED_B and abs(pred) > loss.B:
        state.clamps += 1
        log.debug("clamped baseline prediction %.4g into [-%.4g, %.4g]", pred, loss.B, loss.B)
        pred = math.copysign(loss.B, pred)
    weight = -gamma_n * derivative_scalar(loss, pred, float(y))
    w[-1] = weight
    # ||g + w K(x,.)||^2 = ||g||^2 + 2 w g(x) + w^2 K(x, x), unclamped g(x)
    state.norm_sq += 2.0 * weight * float(np.dot(w[:-1], row[:-1])) + weight * weight * float(row[-1])
    return weight


class KernelSGD:
    """Driver with step size gamma0 * n^-t."""

    def __init__(self, kernel: BaselineKernel, d: int, loss: LossSpec, gamma0: float, t: float):
        self.state = SupportExpansion(kernel, d)
        self.loss = loss
        self.gamma0 = gamma0
        self.t = t

    @property
    def n(self) -> int:
        return self.state.n

    def step(self, x, y) -> float:
        gamma = self.gamma0 * (self.state.n + 1) ** (-self.t)
        return baseline_step(self.state, x, y, gamma, self.loss)
