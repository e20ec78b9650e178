from phyplan.bench.experiment import (
    AGENTS,
    BACKENDS,
    CSV_HEADER,
    ExperimentConfig,
    RegretCurve,
    ResultRow,
    read_results,
    run_experiment,
    run_planner,
    run_random,
    summarize,
)
from phyplan.bench.zoo import ModelFilesError, load_models, train_all, train_default

__all__ = [
    "AGENTS",
    "BACKENDS",
    "CSV_HEADER",
    "ExperimentConfig",
    "ModelFilesError",
    "RegretCurve",
    "ResultRow",
    "load_models",
    "read_results",
    "run_experiment",
    "run_planner",
    "run_random",
    "summarize",
    "train_all",
    "train_default",
]
