"""Held-out accuracy of the truncated learner and a Gaussian-kernel
baseline on the noisy linear-boundary classification stream."""

from pathlib import Path

import numpy as np

from sphsgd.bench.config import load_config
from sphsgd.bench.experiment import run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    for stem in ("classify", "classify_gaussian"):
        spec, _ = load_config(ROOT / "configs" / f"{stem}.cfg")
        rows = run_experiment(spec)
        for est in sorted({r.estimator for r in rows}):
            for n in spec.checkpoints:
                acc = [r.value for r in rows if r.estimator == est and r.n == n]
                print(f"{spec.learner:18s} {est:6s} n={n:>6d} accuracy {np.mean(acc):.3f} +- {np.std(acc):.3f}")


if __name__ == "__main__":
    main()
