from phyplan.worldsim.chains import ExactPhysics, run_chain
from phyplan.worldsim.oracle import (
    DEFAULT_BOUNDS,
    DEFAULT_PARAMS,
    OracleModel,
    generate_dataset,
    oracle_predict,
)
from phyplan.worldsim.sim import execute_action, true_reward, write_trajectory
from phyplan.worldsim.tasks import (
    PHASES,
    TASK_NAMES,
    ConfigError,
    GoalRegion,
    SimNoise,
    TaskDef,
    WorldState,
    get_task,
    load_tasks,
    parse_tasks,
    reward_of,
)

__all__ = [
    "DEFAULT_BOUNDS",
    "DEFAULT_PARAMS",
    "PHASES",
    "TASK_NAMES",
    "ConfigError",
    "ExactPhysics",
    "GoalRegion",
    "OracleModel",
    "SimNoise",
    "TaskDef",
    "WorldState",
    "execute_action",
    "generate_dataset",
    "get_task",
    "load_tasks",
    "oracle_predict",
    "parse_tasks",
    "reward_of",
    "run_chain",
    "true_reward",
    "write_trajectory",
]
