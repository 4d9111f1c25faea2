"""Experiment harness: configuration, drivers, reports, and the CLI."""

from .config import ConfigError, ExperimentConfig
from .experiments import run
from .oracle import PauliJordanOracle
from .report import Report, Verdict, write_report

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "PauliJordanOracle",
    "Report",
    "Verdict",
    "run",
    "write_report",
]
