from .config import ConfigError, ExperimentConfig, load_config
from .plot import Axes, Series, render_plot, render_svg
from .runner import ExperimentResult, run_cell, run_experiment
from .traceio import emit_trace, parse_trace, read_columns, read_trace, trace_to_csv

__all__ = [
    "Axes",
    "ConfigError",
    "ExperimentConfig",
    "ExperimentResult",
    "Series",
    "emit_trace",
    "load_config",
    "parse_trace",
    "read_columns",
    "read_trace",
    "render_plot",
    "render_svg",
    "run_cell",
    "run_experiment",
    "trace_to_csv",
]
