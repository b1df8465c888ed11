"""Experiment orchestration: configs, seeded sweeps, CSV and SVG output."""

from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .main import main
from .runner import CSV_COLUMNS, PointRecord, SweepResult, emit_csv, point_seed, read_csv, run, run_point

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "main",
    "run",
    "run_point",
    "point_seed",
    "emit_csv",
    "read_csv",
    "PointRecord",
    "SweepResult",
    "CSV_COLUMNS",
]
