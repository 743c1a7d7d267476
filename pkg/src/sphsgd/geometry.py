"""Uniform sampling on S^{d-1}, the inverse stereographic-type map onto S^d,
and per-replication random streams."""

from __future__ import annotations

import numpy as np

RNG_NAME = "numpy.random.PCG64 via SeedSequence([seed, replication]).spawn(3)"
MIN_NORM = 1e-8


def make_rngs(seed: int, replication: int = 0) -> tuple[np.random.Generator, ...]:
    """Independent (inputs, noise, test) generators for one replication."""
    children = np.random.SeedSequence([int(seed), int(replication)]).spawn(3)
    return tuple(np.random.Generator(np.random.PCG64(c)) for c in children)


class SphereSampler:
    """Uniform points on the unit sphere of R^d."""

    def __init__(self, d: int, rng: np.random.Generator | int | None = None):
        if d < 2:
            raise ValueError("d must be >= 2")
        self.d = d
        self.rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)

    def sample(self, n: int) -> np.ndarray:
        X = self.rng.standard_normal((n, self.d))
        norms = np.linalg.norm(X, axis=1)
        bad = norms < MIN_NORM
        while np.any(bad):
            X[bad] = self.rng.standard_normal((int(bad.sum()), self.d))
            norms[bad] = np.linalg.norm(X[bad], axis=1)
            bad = norms < MIN_NORM
        return X / norms[:, None]

    def __call__(self) -> np.ndarray:
        return self.sample(1)[0]


def sample_uniform(sampler: SphereSampler) -> np.ndarray:
    return sampler()


def inverse_polar(x) -> np.ndarray:
    """(4x, 4 - |x|^2) / (4 + |x|^2), mapping R^d onto S^d.

    Works row-wise on an (n, d) array.
    """
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError("inverse_polar needs finite input")
    sq = np.sum(x * x, axis=-1, keepdims=True)
    return np.concatenate([4.0 * x, 4.0 - sq], axis=-1) / (4.0 + sq)
