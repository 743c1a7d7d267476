"""Command line entry point: ``sphsgd run|slope|dump-target``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from ..model import dump_csv
from .config import ConfigError, load_config
from .experiment import InsufficientDataError, fit_slope, read_csv, run_experiment, write_csv
from .targets import make_target


def _run(args) -> int:
    spec, raw = load_config(args.config)
    out = Path(args.out) if args.out else Path("results") / (Path(args.config).stem + ".csv")
    records = run_experiment(spec, jobs=args.jobs)
    write_csv(out, spec, records, raw)
    print(f"wrote {len(records)} rows to {out}")
    return 0


def _slope(args) -> int:
    rows = read_csv(args.csv)
    estimators = [args.estimator] if args.estimator else sorted({r["estimator"] for r in rows})
    status = 0
    for est in estimators:
        try:
            fit = fit_slope(rows, (args.nmin, args.nmax), estimator=est, metric=args.metric)
        except InsufficientDataError as exc:
            print(f"{est}: {exc}", file=sys.stderr)
            status = 1
            continue
        print(f"{est} {args.metric}: slope {fit['slope']:.4f} +- {fit['stderr']:.4f} over {fit['points']} checkpoints")
    return status


def _dump(args) -> int:
    target = make_target(args.name)
    dump_csv(target.coef, args.out or sys.stdout)
    print(f"# {target.name}: degree {target.coef.L}, dropped tail energy {target.tail_energy:.3e}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sphsgd", description="Truncated-kernel SGD benchmark harness")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write CSV + metadata")
    run.add_argument("config")
    run.add_argument("--out", help="output CSV (default results/<config stem>.csv)")
    run.add_argument("--jobs", type=int, default=1, help="parallel replication workers")
    run.set_defaults(func=_run)

    slope = sub.add_parser("slope", help="fit the log-log slope of mean error against n")
    slope.add_argument("csv")
    slope.add_argument("--nmin", type=int)
    slope.add_argument("--nmax", type=int)
    slope.add_argument("--estimator", choices=("last", "suffix", "polyak"))
    slope.add_argument("--metric", default="l2_sq", choices=("l2_sq", "risk_gap", "accuracy"))
    slope.set_defaults(func=_slope)

    dump = sub.add_parser("dump-target", help="write target coefficients as k,j,coefficient CSV")
    dump.add_argument("name", choices=("circle1", "circle2", "sphere3"))
    dump.add_argument("--out")
    dump.set_defaults(func=_dump)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
