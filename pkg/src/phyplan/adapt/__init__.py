from phyplan.adapt.gp import BETA, GPModel, gp_fit, gp_posterior, ucb_correct
from phyplan.adapt.loop import (
    AttemptLog,
    AttemptRecord,
    adaptive_loop,
    attempt_seed,
    grid_actions,
    grid_optimum,
    regret,
)

__all__ = [
    "BETA",
    "AttemptLog",
    "AttemptRecord",
    "GPModel",
    "adaptive_loop",
    "attempt_seed",
    "gp_fit",
    "gp_posterior",
    "grid_actions",
    "grid_optimum",
    "regret",
    "ucb_correct",
]
