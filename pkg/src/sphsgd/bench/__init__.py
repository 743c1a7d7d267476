"""Synthetic experiments, error metrics and the command line harness."""

from .config import ConfigError, build_spec, load_config, parse_config_text
from .experiment import (
    CSV_HEADER,
    ErrorRecord,
    ExperimentSpec,
    InsufficientDataError,
    NoiseModel,
    auto_radius,
    classification_experiment,
    fit_slope,
    read_csv,
    run_experiment,
    write_csv,
)
from .targets import Target, l2_sq, make_target, make_target_circle, make_target_sphere3
