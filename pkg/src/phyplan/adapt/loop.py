"""The adaptive attempt loop and the grid-search reward optimum."""

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from phyplan.adapt.gp import GPModel, gp_fit
from phyplan.planner.mcts import plan
from phyplan.planner.rollout import predicted_reward
from phyplan.worldsim.sim import execute_action, true_reward
from phyplan.worldsim.tasks import SimNoise


@dataclass(frozen=True)
class AttemptRecord:
    attempt: int
    action: tuple
    phy_reward: float
    reward_sim: float
    best_reward: float
    regret: float
    plan_ms: float = 0.0


@dataclass
class AttemptLog:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def best_rewards(self):
        return [r.best_reward for r in self.records]

    @property
    def regrets(self):
        return [r.regret for r in self.records]

    def to_csv(self, path, dim_names):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["attempt", *dim_names, "phy_reward", "reward_sim", "best_reward", "regret_so_far"])
            for r in self.records:
                writer.writerow([r.attempt, *(repr(float(a)) for a in r.action), repr(r.phy_reward),
                                 repr(r.reward_sim), repr(r.best_reward), repr(r.regret)])


def regret(opt_reward, best_reward):
    """(opt - best) / opt, clipped to [0, 1]."""
    if not opt_reward > 0:
        raise ValueError("opt_reward must be positive")
    return float(min(max((opt_reward - best_reward) / opt_reward, 0.0), 1.0))


def attempt_seed(seed, attempt):
    """Independent integer seed for one attempt of one run."""
    return int(np.random.SeedSequence([int(seed), int(attempt)]).generate_state(1)[0])


def adaptive_loop(task, models, cfg, num_attempts, opt_reward, noise=None, use_gp=True, gp=None):
    """Plan, execute and refit the residual GP ``num_attempts`` times.

    The GP is trained on reward_sim minus the skill models' own prediction
    for the executed action (without the GP term), so that adding its mean
    to a model prediction estimates the true reward. With ``use_gp`` false
    the planner runs uncorrected. Wall-clock time of each plan() call is
    logged. Returns (final regret, log).
    """
    if num_attempts < 0:
        raise ValueError("num_attempts must be >= 0")
    noise = noise or SimNoise()
    template = gp or GPModel()
    actions, residuals = [], []
    best_reward = 0.0
    log = AttemptLog()
    for k in range(num_attempts):
        model = gp_fit(template, actions, residuals) if use_gp else None
        step_cfg = replace(cfg, seed=attempt_seed(cfg.seed, k))
        start = time.perf_counter()
        best_action, phy_reward = plan(task, models, model, step_cfg)
        plan_ms = 1e3 * (time.perf_counter() - start)
        step_noise = replace(noise, seed=attempt_seed(noise.seed, k))
        _, reward_sim, _ = execute_action(task, best_action, step_noise, record=False)
        best_reward = max(best_reward, reward_sim)
        actions.append(task.to_unit(best_action))
        residuals.append(reward_sim - predicted_reward(task, best_action, models, cfg.t_query_step))
        log.records.append(AttemptRecord(k, tuple(float(a) for a in best_action), float(phy_reward),
                                         float(reward_sim), best_reward, regret(opt_reward, best_reward), plan_ms))
    return regret(opt_reward, best_reward), log


_GRID_CACHE = {}


def _task_key(task, resolution):
    geo = tuple(sorted((k, repr(v)) for k, v in task.geometry.items()))
    return (task.name, geo, tuple(task.goal.center), task.goal.radius, task.d_ref,
            tuple(task.lower), tuple(task.upper), resolution)


def grid_actions(task, resolution):
    axes = [np.linspace(d.lower, d.upper, resolution) for d in task.action_dims]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def grid_optimum(task, resolution=200):
    """Best noise-free reward over a uniform grid of ``resolution`` points per dimension.

    Evaluation stops early at a reward of 1, the maximum. Results are cached
    per task and resolution.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    key = _task_key(task, resolution)
    if key not in _GRID_CACHE:
        best = 0.0
        for a in grid_actions(task, resolution):
            best = max(best, true_reward(task, a))
            if best >= 1.0:
                break
        _GRID_CACHE[key] = best
    return _GRID_CACHE[key]
