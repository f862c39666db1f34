"""Experiment configs, the Monte Carlo runner, reports and the CLI."""
from __future__ import annotations

from .config import CONFIG_SCHEMA, ExperimentConfig
from .experiments import (Report, lpp_geodesic_experiment, merge_reports, run_config,
                          run_experiment)

__all__ = ["CONFIG_SCHEMA", "ExperimentConfig", "Report", "lpp_geodesic_experiment",
           "merge_reports", "run_config", "run_experiment"]
