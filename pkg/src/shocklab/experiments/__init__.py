"""Configuration, orchestration and reporting of the numerical experiments."""

from .config import ExperimentConfig, apply_overrides, build_setup, config_from_dict, load_config, perturbation, validate_config
from .fitting import DecayFit, MonotonicityReport, fit_decay, monotonicity_audit
from .registry import PARAMS, experiment_names, run_experiment

__all__ = [
    "DecayFit",
    "ExperimentConfig",
    "MonotonicityReport",
    "PARAMS",
    "apply_overrides",
    "build_setup",
    "config_from_dict",
    "experiment_names",
    "fit_decay",
    "load_config",
    "monotonicity_audit",
    "perturbation",
    "run_experiment",
    "validate_config",
]
