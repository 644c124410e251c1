"""Experiment runner: configs, cache, CSV/JSON output and the command line."""

from .config import EXPERIMENTS, ExperimentConfig, load_config
from .runner import ResultRecord, cache_lookup, run

__all__ = ["EXPERIMENTS", "ExperimentConfig", "ResultRecord", "cache_lookup", "load_config",
           "run"]
