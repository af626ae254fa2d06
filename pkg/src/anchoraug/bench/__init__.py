from .config import ExperimentConfig, config_hash
from .runner import (
    ExperimentResult,
    emit_plot_points,
    load_splits,
    run_experiment,
    sweep,
    verify_result,
    write_result,
)

__all__ = [
    "ExperimentConfig",
    "ExperimentResult",
    "config_hash",
    "emit_plot_points",
    "load_splits",
    "run_experiment",
    "sweep",
    "verify_result",
    "write_result",
]
