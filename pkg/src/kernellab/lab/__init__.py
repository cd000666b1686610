"""Experiment harness: configuration, sweeps and output files."""

from .config import ConfigError, ExperimentConfig, load_config, load_schema, parse_config
from .experiments import (
    BiasResult,
    SelectionResult,
    beta_sweep,
    bias_variance,
    diagnose,
    estimate_bias,
    fit_r2,
    greedy_feature_selection,
    rkhs_growth,
    slice_trace,
    tau_sweep,
)
