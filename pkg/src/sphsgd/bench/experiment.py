"""Experiment orchestration: data streams, learners, error records, slopes."""

from __future__ import annotations

import csv
import json
import logging
import math
import subprocess
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.stats import linregress

from ..baseline import KernelSGD
from ..geometry import RNG_NAME, SphereSampler, inverse_polar, make_rngs
from ..harmonics import eval_basis_batch
from ..kernel import BaselineKernel, kappa_sq
from ..loss import RESTRICTED_B, LossSpec, value
from ..model import evaluate_many
from ..tksgd import SgdConfig, run_stream
from .targets import Target, l2_sq, make_target

log = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "replication", "estimator", "n", "metric", "value", "wall_time_s")
LEARNERS = ("tksgd", "baseline-gaussian", "baseline-matern32", "baseline-matern52", "baseline-circle")
ESTIMATORS = ("last", "suffix", "polyak")
METRICS = ("l2_sq", "risk_gap", "accuracy")

# test-set and quadrature sizes for metrics that need point evaluations
TEST_SIZE = 2000
CIRCLE_GRID = 1024
FLIP_PROB = 0.1


class InsufficientDataError(ValueError):
    pass


@dataclass(frozen=True)
class NoiseModel:
    """``uniform`` draws U[-scale, scale], ``gaussian`` N(0, scale^2),
    ``flip`` flips sign labels with probability ``scale``."""

    kind: str = "none"
    scale: float = 0.0

    def __post_init__(self):
        if self.kind not in ("none", "uniform", "gaussian", "flip"):
            raise ValueError(f"unknown noise model {self.kind!r}")
        if self.scale < 0 or (self.kind == "flip" and self.scale > 1):
            raise ValueError("invalid noise scale")

    @classmethod
    def parse(cls, text: str) -> "NoiseModel":
        text = text.strip()
        if text == "none":
            return cls()
        kind, _, scale = text.partition(":")
        return cls(kind.strip(), float(scale))

    def __str__(self):
        return "none" if self.kind == "none" else f"{self.kind}:{self.scale:g}"

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, n)
        if self.kind == "gaussian":
            return rng.normal(0.0, self.scale, n)
        return np.zeros(n)


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    d: int
    loss: LossSpec
    config: SgdConfig
    checkpoints: tuple[int, ...]
    noise: NoiseModel = NoiseModel()
    learner: str = "tksgd"
    replications: int = 1
    seed: int = 0
    r: float | None = None

    def __post_init__(self):
        cps = tuple(int(c) for c in self.checkpoints)
        # an empty grid is allowed and yields no rows
        if any(b <= a for a, b in zip(cps, cps[1:])) or (cps and cps[0] < 1):
            raise ValueError("checkpoints must be positive and strictly increasing")
        object.__setattr__(self, "checkpoints", cps)
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.learner not in LEARNERS:
            raise ValueError(f"unknown learner {self.learner!r}; expected one of {LEARNERS}")
        if self.learner == "baseline-circle" and self.d != 2:
            raise ValueError("baseline-circle needs d=2")
        if self.config.d != self.model_dim:
            raise ValueError("config dimension does not match the experiment")

    @property
    def is_classification(self) -> bool:
        return self.name == "classify"

    @property
    def model_dim(self) -> int:
        """Ambient dimension the learner sees; classification inputs of R^d
        are mapped onto S^d first."""
        return self.d + 1 if self.is_classification else self.d

    @property
    def target(self) -> Target | None:
        if self.is_classification:
            return None
        return make_target(self.name, self.d, self.config.s, self.r)


@dataclass(frozen=True)
class ErrorRecord:
    n: int
    replication: int
    estimator: str
    metric: str
    value: float
    wall_time: float

    def __post_init__(self):
        if self.estimator not in ESTIMATORS or self.metric not in METRICS:
            raise ValueError(f"bad record labels {self.estimator!r}/{self.metric!r}")
        if not math.isfinite(self.value) or (self.metric == "l2_sq" and self.value < 0):
            raise ValueError(f"invalid {self.metric} value {self.value}")


def auto_radius(loss: LossSpec, schedule, cap: float = 1.0) -> float:
    """Largest radius <= cap keeping kappa*Q safely inside the loss domain."""
    return min(cap, 0.99 * loss.B / math.sqrt(kappa_sq(schedule)))


def baseline_kernel_for(spec: ExperimentSpec) -> BaselineKernel:
    kind = spec.learner.removeprefix("baseline-")
    if kind == "circle":
        return BaselineKernel("circle-bernoulli", s=int(round(spec.config.s)))
    return BaselineKernel(kind)


def _clamp(spec: ExperimentSpec, u: np.ndarray) -> np.ndarray:
    if spec.loss.kind in RESTRICTED_B:
        return np.clip(u, -spec.loss.B, spec.loss.B)
    return u


def _regression_data(spec: ExperimentSpec, replication: int):
    rng_x, rng_noise, rng_test = make_rngs(spec.seed, replication)
    target = spec.target
    n = spec.checkpoints[-1]
    X = SphereSampler(spec.d, rng_x).sample(n)
    Y = target.values(X) + spec.noise.draw(rng_noise, n)
    Xt = SphereSampler(spec.d, rng_test).sample(TEST_SIZE)
    Yt = target.values(Xt) + spec.noise.draw(rng_test, TEST_SIZE)
    return target, X, Y, Xt, Yt


def _risk(spec, u, y) -> float:
    return float(np.mean(value(spec.loss, _clamp(spec, u), y)))


def _tksgd_regression(spec: ExperimentSpec, replication: int) -> list[ErrorRecord]:
    target, X, Y, Xt, Yt = _regression_data(spec, replication)
    snaps = run_stream(spec.config, (X, Y), spec.checkpoints)
    best = _risk(spec, target.values(Xt), Yt)
    out = []
    for snap in snaps:
        Bt = eval_basis_batch(spec.d, snap.L, Xt)
        for est, f in (("last", snap.last), ("suffix", snap.suffix)):
            if f is None:
                continue
            out.append(ErrorRecord(snap.n, replication, est, "l2_sq", l2_sq(f, target), snap.wall_time))
            risk = _risk(spec, evaluate_many(f, Bt), Yt) - best
            out.append(ErrorRecord(snap.n, replication, est, "risk_gap", risk, snap.wall_time))
    return out


def _error_points(spec: ExperimentSpec, Xt: np.ndarray):
    """Points and weights for the omega-norm of a baseline function:
    an equispaced grid (exact for trig polynomials below its size) on S^1,
    the fixed test sample elsewhere."""
    if spec.d == 2:
        th = 2.0 * math.pi * np.arange(CIRCLE_GRID) / CIRCLE_GRID
        return np.column_stack([np.cos(th), np.sin(th)])
    return Xt


def _baseline_regression(spec: ExperimentSpec, replication: int) -> list[ErrorRecord]:
    target, X, Y, Xt, Yt = _regression_data(spec, replication)
    P = _error_points(spec, Xt)
    fP = target.values(P)
    best = _risk(spec, target.values(Xt), Yt)
    learner = KernelSGD(baseline_kernel_for(spec), spec.d, spec.loss, spec.config.gamma0, spec.config.t)
    out, wall, i = [], 0.0, 0
    for cp in spec.checkpoints:
        t0 = time.perf_counter()
        for x, y in zip(X[i:cp], Y[i:cp]):
            learner.step(x, y)
        wall += time.perf_counter() - t0
        i = cp
        for est, avg in (("last", False), ("polyak", True)):
            g = learner.state.predict_many(P, averaged=avg)
            out.append(ErrorRecord(cp, replication, est, "l2_sq", float(np.mean((g - fP) ** 2)), wall))
            risk = _risk(spec, learner.state.predict_many(Xt, averaged=avg), Yt) - best
            out.append(ErrorRecord(cp, replication, est, "risk_gap", risk, wall))
    if learner.state.clamps:
        log.info("replication %d: baseline prediction clamped %d times", replication, learner.state.clamps)
    return out


def classification_direction(d: int) -> tuple[np.ndarray, float]:
    """Fixed decision function g(x) = w.(x - 1/2) shared by all replications."""
    w = np.random.default_rng(12345 + d).standard_normal(d)
    return w / np.linalg.norm(w), 0.5


def _classification_data(spec: ExperimentSpec, replication: int, n: int):
    rng_x, rng_noise, rng_test = make_rngs(spec.seed, replication)
    w, c = classification_direction(spec.d)
    p = spec.noise.scale if spec.noise.kind == "flip" else 0.0

    def draw(rng_in, rng_flip, m):
        Xr = rng_in.uniform(0.0, 1.0, (m, spec.d))
        y = np.where((Xr - c) @ w >= 0, 1.0, -1.0)
        flips = rng_flip.uniform(size=m) < p
        return Xr, np.where(flips, -y, y)

    Xr, Y = draw(rng_x, rng_noise, n)
    Xtr, Yt = draw(rng_test, rng_test, TEST_SIZE)
    return Xr, Y, Xtr, Yt


def classification_experiment(spec: ExperimentSpec, replication: int = 0) -> list[ErrorRecord]:
    """Held-out accuracy on the synthetic sign-label stream (inputs uniform on
    [0,1]^d, mapped onto S^d for the truncated learner)."""
    if not spec.checkpoints:
        return []
    Xr, Y, Xtr, Yt = _classification_data(spec, replication, spec.checkpoints[-1])
    out = []
    if spec.learner == "tksgd":
        D = spec.model_dim
        X, Xt = inverse_polar(Xr), inverse_polar(Xtr)
        for snap in run_stream(spec.config, (X, Y), spec.checkpoints):
            Bt = eval_basis_batch(D, snap.L, Xt)
            for est, f in (("last", snap.last), ("suffix", snap.suffix)):
                if f is not None:
                    acc = float(np.mean(np.sign(evaluate_many(f, Bt)) == Yt))
                    out.append(ErrorRecord(snap.n, replication, est, "accuracy", acc, snap.wall_time))
        return out
    learner = KernelSGD(baseline_kernel_for(spec), spec.d, spec.loss, spec.config.gamma0, spec.config.t)
    wall, i = 0.0, 0
    for cp in spec.checkpoints:
        t0 = time.perf_counter()
        for x, y in zip(Xr[i:cp], Y[i:cp]):
            learner.step(x, y)
        wall += time.perf_counter() - t0
        i = cp
        for est, avg in (("last", False), ("polyak", True)):
            acc = float(np.mean(np.sign(learner.state.predict_many(Xtr, averaged=avg)) == Yt))
            out.append(ErrorRecord(cp, replication, est, "accuracy", acc, wall))
    return out


def run_replication(spec: ExperimentSpec, replication: int) -> list[ErrorRecord]:
    if not spec.checkpoints:
        return []
    if spec.is_classification:
        return classification_experiment(spec, replication)
    if spec.learner == "tksgd":
        return _tksgd_regression(spec, replication)
    return _baseline_regression(spec, replication)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[ErrorRecord]:
    """All replications, rows sorted by (replication, n)."""
    reps = range(spec.replications)
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            chunks = list(pool.map(run_replication, [spec] * spec.replications, reps))
    else:
        chunks = [run_replication(spec, r) for r in reps]
    rows = [rec for chunk in chunks for rec in chunk]
    order = {e: i for i, e in enumerate(ESTIMATORS)}
    mets = {m: i for i, m in enumerate(METRICS)}
    rows.sort(key=lambda r: (r.replication, r.n, order[r.estimator], mets[r.metric]))
    return rows


def fit_slope(records, n_range=(None, None), estimator: str | None = None, metric: str | None = None) -> dict:
    """Least-squares slope of log(mean value) against log n.

    ``records`` are ErrorRecords (or dicts with the same keys); values are
    averaged over replications at each n before taking logs.
    """
    nmin, nmax = n_range
    groups: dict[int, list[float]] = {}
    for rec in records:
        rec = rec if isinstance(rec, dict) else asdict(rec)
        if estimator is not None and rec["estimator"] != estimator:
            continue
        if metric is not None and rec["metric"] != metric:
            continue
        n = int(rec["n"])
        if (nmin is not None and n < nmin) or (nmax is not None and n > nmax):
            continue
        groups.setdefault(n, []).append(float(rec["value"]))
    if len(groups) < 4:
        raise InsufficientDataError(f"need >= 4 checkpoints in range, found {len(groups)}")
    ns = np.array(sorted(groups), dtype=float)
    means = np.array([np.mean(groups[int(n)]) for n in ns])
    if np.any(means <= 0):
        raise InsufficientDataError("mean errors must be positive to fit a log-log slope")
    fit = linregress(np.log(ns), np.log(means))
    return {"slope": float(fit.slope), "stderr": float(fit.stderr), "intercept": float(fit.intercept), "points": len(ns)}


def git_describe() -> str:
    try:
        res = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            capture_output=True, text=True, timeout=10, cwd=Path(__file__).resolve().parent,
        )
        return res.stdout.strip() or "unknown"
    except (OSError, subprocess.SubprocessError):
        return "unknown"


def write_csv(path, spec: ExperimentSpec, records, raw_config: dict | None = None) -> Path:
    """Write rows plus the metadata sidecar ``<basename>.meta.json``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([spec.name, r.replication, r.estimator, r.n, r.metric, repr(r.value), f"{r.wall_time:.6f}"])
    meta = {
        "experiment": spec.name,
        "learner": spec.learner,
        "seed": spec.seed,
        "replications": spec.replications,
        "rng": RNG_NAME,
        "git_describe": git_describe(),
        "config": raw_config or {},
        "resolved": {
            "d": spec.d, "s": spec.config.s, "theta": spec.config.theta, "t": spec.config.t,
            "gamma0": spec.config.gamma0, "log_factor": spec.config.log_factor, "Q": spec.config.Q,
            "alpha": spec.config.alpha, "loss": spec.loss.kind, "B": spec.loss.B,
            "noise": str(spec.noise), "checkpoints": list(spec.checkpoints),
        },
    }
    path.with_suffix(".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    return path


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return list(reader)
