"""Experiment runner: configs, the seven experiments, and CSV/JSON output."""

from .config import EXPERIMENTS, ConfigError, ExperimentConfig, dump_config, load_config, make_config
from .experiments import RUNNERS, run_experiment
from .results import ExperimentResult, Row, to_csv, to_json, write_results

__all__ = [
    "EXPERIMENTS",
    "RUNNERS",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "Row",
    "dump_config",
    "load_config",
    "make_config",
    "run_experiment",
    "to_csv",
    "to_json",
    "write_results",
]
