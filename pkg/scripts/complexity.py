"""Wall-clock and counter comparison of the truncated learner against the
pairwise kernel-SGD baseline on the circle2 stream."""

import argparse
import time
from pathlib import Path

from sphsgd.baseline import KernelSGD
from sphsgd.bench.config import load_config
from sphsgd.bench.experiment import baseline_kernel_for
from sphsgd.geometry import SphereSampler, make_rngs
from sphsgd.harmonics import dim_pi
from sphsgd.tksgd import TKernelSGD

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=10**5, help="truncated-learner steps")
    ap.add_argument("--n-baseline", type=int, default=2 * 10**4)
    ap.add_argument("--kernel", default="circle2_gaussian", help="baseline config stem")
    args = ap.parse_args()

    spec, _ = load_config(ROOT / "configs" / "circle2.cfg")
    rng_x, rng_noise, _ = make_rngs(spec.seed, 0)
    n = max(args.n, args.n_baseline)
    X = SphereSampler(2, rng_x).sample(n)
    Y = spec.target.values(X) + spec.noise.draw(rng_noise, n)

    learner = TKernelSGD(spec.config)
    t0 = time.perf_counter()
    step = 10**4
    for i in range(0, args.n, step):
        learner.run_chunk(X[i:i + step], Y[i:i + step])
        print(f"tksgd    n={learner.n:>7d} L={learner.L:2d} coef={learner.state.coefficient_count:3d} "
              f"basis evals/step={dim_pi(2, learner.L):3d} wall={time.perf_counter() - t0:7.2f}s")

    bspec, _ = load_config(ROOT / "configs" / f"{args.kernel}.cfg")
    base = KernelSGD(baseline_kernel_for(bspec), 2, spec.loss, bspec.config.gamma0, bspec.config.t)
    t0 = time.perf_counter()
    for j, (x, y) in enumerate(zip(X[:args.n_baseline], Y[:args.n_baseline]), start=1):
        base.step(x, y)
        if j % 5000 == 0:
            print(f"baseline n={j:>7d} kernel evals={base.state.kernel_evals:>11d} wall={time.perf_counter() - t0:7.2f}s")


if __name__ == "__main__":
    main()
