"""Run the three rate experiments and print top-range log-log slopes.

    python3 scripts/run_rates.py [--out results] [--jobs 1]
"""

import argparse
from pathlib import Path

from sphsgd.bench.config import load_config
from sphsgd.bench.experiment import fit_slope, run_experiment, write_csv

ROOT = Path(__file__).resolve().parent.parent
RUNS = (("circle2", "last"), ("circle1", "last"), ("sphere3", "suffix"))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--nmin", type=int, default=2**14)
    args = ap.parse_args()
    for name, est in RUNS:
        spec, raw = load_config(ROOT / "configs" / f"{name}.cfg")
        rows = run_experiment(spec, jobs=args.jobs)
        write_csv(Path(args.out) / f"{name}.csv", spec, rows, raw)
        for e in ("last", "suffix"):
            fit = fit_slope(rows, (args.nmin, None), estimator=e, metric="l2_sq")
            mark = " *" if e == est else ""
            print(f"{name:8s} {e:6s} slope {fit['slope']:+.3f} +- {fit['stderr']:.3f}{mark}")


if __name__ == "__main__":
    main()
