"""Experiment config files.

One ``key = value`` pair per line; ``#`` starts a comment.  Allowed keys:

    experiment    circle1 | circle2 | sphere3 | zero | classify
    d             ambient dimension (inputs of R^d for classify)
    s             capacity parameter
    r             regularity; with s gives theta = 1/(2s(2r+1)), t = 2r/(2r+1)
    theta, t      raw truncation / step exponents (override r)
    gamma0        base step size
    log_factor    true | false (default: true when derived from r)
    Q             ball radius, or ``auto`` = min(1, 0.99 B / kappa)
    alpha         suffix fraction
    loss          l2 | logistic | poisson | huber_sqrt | huber_logcosh | cauchy | welsch
    noise         none | uniform:<a> | gaussian:<sigma> | flip:<p>
    replications  number of independent runs
    checkpoints   ``2^10..2^17`` (powers of two) or a comma list
    seed          base seed of the per-replication streams
    learner       tksgd | baseline-gaussian | baseline-matern32 | baseline-matern52 | baseline-circle
"""

from __future__ import annotations

import re
from pathlib import Path

from ..loss import LossSpec
from ..tksgd import SgdConfig
from .experiment import ExperimentSpec, NoiseModel, auto_radius

KEYS = (
    "experiment", "d", "s", "r", "theta", "t", "gamma0", "log_factor", "Q",
    "alpha", "loss", "noise", "replications", "checkpoints", "seed", "learner",
)
REQUIRED = ("experiment", "d", "loss", "checkpoints")


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    missing = [k for k in REQUIRED if k not in out]
    if missing:
        raise ConfigError(f"missing required keys: {', '.join(missing)}")
    return out


def parse_checkpoints(text: str) -> tuple[int, ...]:
    m = re.fullmatch(r"\s*2\^(\d+)\s*\.\.\s*2\^(\d+)\s*", text)
    if m:
        lo, hi = int(m.group(1)), int(m.group(2))
        if hi < lo:
            raise ConfigError("empty checkpoint range")
        return tuple(2**k for k in range(lo, hi + 1))
    try:
        return tuple(int(float(v)) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"bad checkpoints {text!r}") from exc


def _bool(text: str) -> bool:
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {text!r}")


def _fraction(text: str) -> float:
    num, sep, den = text.partition("/")
    try:
        return float(num) / float(den) if sep else float(num)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad number {text!r}") from exc


def build_spec(raw: dict[str, str]) -> ExperimentSpec:
    try:
        name = raw["experiment"]
        d = int(raw["d"])
        s = _fraction(raw.get("s", "1"))
        r = _fraction(raw["r"]) if "r" in raw else None
        loss = LossSpec(raw["loss"])
        if "theta" in raw and "t" in raw:
            theta, t = _fraction(raw["theta"]), _fraction(raw["t"])
            log_default = False
        elif r is not None:
            theta, t = 1.0 / (2 * s * (2 * r + 1)), 2 * r / (2 * r + 1)
            theta = _fraction(raw["theta"]) if "theta" in raw else theta
            t = _fraction(raw["t"]) if "t" in raw else t
            log_default = "theta" not in raw and "t" not in raw
        else:
            raise ConfigError("give either r or both theta and t")
        log_factor = _bool(raw["log_factor"]) if "log_factor" in raw else log_default
        model_dim = d + 1 if name == "classify" else d
        kw = dict(
            d=model_dim, loss=loss, s=s, theta=theta, t=t,
            gamma0=_fraction(raw.get("gamma0", "1")), log_factor=log_factor,
            alpha=_fraction(raw.get("alpha", "1/2")), seed=int(raw.get("seed", "0")),
        )
        cfg = SgdConfig(**kw)
        q = raw.get("Q", "auto")
        Q = auto_radius(loss, cfg.schedule) if q == "auto" else _fraction(q)
        cfg = SgdConfig(**kw, Q=Q)
        return ExperimentSpec(
            name=name, d=d, loss=loss, config=cfg,
            checkpoints=parse_checkpoints(raw["checkpoints"]),
            noise=NoiseModel.parse(raw.get("noise", "none")),
            learner=raw.get("learner", "tksgd"),
            replications=int(raw.get("replications", "1")),
            seed=int(raw.get("seed", "0")), r=r,
        )
    except ConfigError:
        raise
    except (ValueError, KeyError) as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> tuple[ExperimentSpec, dict[str, str]]:
    raw = parse_config_text(Path(path).read_text())
    return build_spec(raw), raw
