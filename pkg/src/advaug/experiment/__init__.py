"""Command-line experiments: corpus generation, recipes, sweeps and reports."""

from .config import DEFAULT_SWEEP, RECIPES, REFERENCE, ConfigError, dump_config, load_config, resolve
from .runner import (
    RunResult,
    best_epsilon,
    cmd_distill,
    cmd_eval,
    cmd_gen_data,
    cmd_sweep,
    cmd_train,
    get_corpus,
    mean_curve,
    read_csv,
    run_recipe,
    train_teacher,
)

__all__ = [
    "DEFAULT_SWEEP",
    "RECIPES",
    "REFERENCE",
    "ConfigError",
    "dump_config",
    "load_config",
    "resolve",
    "RunResult",
    "best_epsilon",
    "cmd_distill",
    "cmd_eval",
    "cmd_gen_data",
    "cmd_sweep",
    "cmd_train",
    "get_corpus",
    "mean_curve",
    "read_csv",
    "run_recipe",
    "train_teacher",
]
