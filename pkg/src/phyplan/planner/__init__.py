from phyplan.planner.mcts import (
    PlannerConfig,
    PlannerError,
    TreeNode,
    expand,
    mcts_iterate,
    new_root,
    plan,
    plan_tree,
    select_arm,
)
from phyplan.planner.rollout import (
    MissingModelError,
    ModelPhysics,
    complete_action,
    oracle_models,
    pinn_rollout,
    predicted_reward,
)

__all__ = [
    "MissingModelError",
    "ModelPhysics",
    "PlannerConfig",
    "PlannerError",
    "TreeNode",
    "complete_action",
    "expand",
    "mcts_iterate",
    "new_root",
    "oracle_models",
    "pinn_rollout",
    "plan",
    "plan_tree",
    "predicted_reward",
    "select_arm",
]
