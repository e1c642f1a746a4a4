"""Seeded experiment orchestration and the command line interface."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .suite import CHECKS, SuiteReport, run_suite, sweep
