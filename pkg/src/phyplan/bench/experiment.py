"""Regret-curve experiments over tasks, agents and seeds."""

import csv
import time
from dataclasses import dataclass, field, replace

import numpy as np

from phyplan.adapt.loop import adaptive_loop, attempt_seed, grid_optimum, regret
from phyplan.planner.mcts import PlannerConfig
from phyplan.planner.rollout import oracle_models
from phyplan.worldsim.sim import execute_action
from phyplan.worldsim.tasks import TASK_NAMES, SimNoise, load_tasks

AGENTS = ("phyplan", "phyplan_no_gp", "random")
BACKENDS = ("skill_models", "slow_oracle", "oracle")
CSV_HEADER = ("task", "agent", "seed", "attempt", "reward", "best_reward", "regret", "plan_ms")


@dataclass(frozen=True)
class ExperimentConfig:
    tasks: tuple = TASK_NAMES
    agents: tuple = ("phyplan", "random")
    num_attempts: int = 20
    seeds: tuple = (1, 2, 3, 4, 5)
    noise: SimNoise = SimNoise()
    planner: PlannerConfig = PlannerConfig()
    rollout_backend: str = "skill_models"
    grid_resolution: int = 200
    config_path: str = None

    def __post_init__(self):
        if not self.tasks or not self.agents or not self.seeds:
            raise ValueError("tasks, agents and seeds must be non-empty")
        bad = [t for t in self.tasks if t not in TASK_NAMES] + [a for a in self.agents if a not in AGENTS]
        if bad:
            raise ValueError(f"unknown tasks or agents: {bad}")
        if self.rollout_backend not in BACKENDS:
            raise ValueError(f"rollout_backend must be one of {BACKENDS}")
        if self.num_attempts < 1:
            raise ValueError("num_attempts must be >= 1")


@dataclass(frozen=True)
class ResultRow:
    task: str
    agent: str
    seed: int
    attempt: int
    reward: float
    best_reward: float
    regret: float
    plan_ms: float


@dataclass
class RegretCurve:
    """Best-so-far regret after each attempt, per (task, agent, seed)."""

    curves: dict = field(default_factory=dict)

    def add(self, rows):
        for r in rows:
            self.curves.setdefault((r.task, r.agent, r.seed), []).append(r.regret)

    def final(self, task, agent):
        return [c[-1] for (t, a, _), c in sorted(self.curves.items()) if t == task and a == agent]

    def mean_final(self, task, agent):
        return float(np.mean(self.final(task, agent)))

    def check(self):
        for key, c in self.curves.items():
            if any(b > a for a, b in zip(c, c[1:])):
                raise AssertionError(f"regret curve {key} increases: {c}")


def _row(task, agent, seed, k, reward, best, opt, ms):
    return ResultRow(task.name, agent, int(seed), k, float(reward), float(best), regret(opt, best), float(ms))


def run_random(task, num_attempts, seed, opt_reward=None, noise=None):
    """Uniform random actions executed in the world; one row per attempt."""
    opt = opt_reward if opt_reward is not None else grid_optimum(task)
    noise = noise or SimNoise()
    rng = np.random.default_rng(seed)
    rows, best = [], 0.0
    for k in range(num_attempts):
        start = time.perf_counter()
        action = rng.uniform(task.lower, task.upper)
        ms = 1e3 * (time.perf_counter() - start)
        _, reward, _ = execute_action(task, action, replace(noise, seed=attempt_seed(noise.seed, k)), record=False)
        best = max(best, reward)
        rows.append(_row(task, "random", seed, k, reward, best, opt, ms))
    return rows


def run_planner(task, models, num_attempts, seed, planner_cfg, use_gp=True, opt_reward=None, noise=None):
    """The adaptive loop for one seed; one row per attempt."""
    opt = opt_reward if opt_reward is not None else grid_optimum(task)
    agent = "phyplan" if use_gp else "phyplan_no_gp"
    _, log = adaptive_loop(task, models, replace(planner_cfg, seed=seed), num_attempts, opt, noise, use_gp)
    return [_row(task, agent, seed, r.attempt, r.reward_sim, r.best_reward, opt, r.plan_ms) for r in log]


def backend_models(task, cfg, models=None):
    if cfg.rollout_backend == "slow_oracle":
        return oracle_models(task, slow=True)
    if cfg.rollout_backend == "oracle":
        return oracle_models(task)
    if models is None:
        raise ValueError("skill_models backend needs trained models")
    return models


def run_experiment(cfg, models=None, out=None):
    """Every (task, agent, seed) cell of ``cfg``.

    ``models`` maps skill names to predictors (used by the skill_models
    backend). Rows are appended to ``out`` (a path) as they are produced.
    Returns (rows, RegretCurve, summary) where summary maps (task, agent)
    to mean final regret and median planning milliseconds.
    """
    tasks = load_tasks(cfg.config_path)
    writer = CsvWriter(out) if out else None
    rows_all, curves = [], RegretCurve()
    try:
        for name in cfg.tasks:
            task = tasks[name]
            opt = grid_optimum(task, cfg.grid_resolution)
            task_models = backend_models(task, cfg, models) if set(cfg.agents) - {"random"} else None
            for agent in cfg.agents:
                for seed in cfg.seeds:
                    if agent == "random":
                        rows = run_random(task, cfg.num_attempts, seed, opt, cfg.noise)
                    else:
                        rows = run_planner(task, task_models, cfg.num_attempts, seed, cfg.planner,
                                           agent == "phyplan", opt, cfg.noise)
                    cell = RegretCurve()
                    cell.add(rows)
                    cell.check()
                    curves.add(rows)
                    rows_all.extend(rows)
                    if writer:
                        writer.write(rows)
    finally:
        if writer:
            writer.close()
    return rows_all, curves, summarize(rows_all)


def summarize(rows):
    out = {}
    for key in sorted({(r.task, r.agent) for r in rows}):
        cell = [r for r in rows if (r.task, r.agent) == key]
        last = max(r.attempt for r in cell)
        finals = [r.regret for r in cell if r.attempt == last]
        out[key] = {"mean_final_regret": float(np.mean(finals)),
                    "median_plan_ms": float(np.median([r.plan_ms for r in cell]))}
    return out


class CsvWriter:
    """Single writer for result rows; the header is written once per new file."""

    def __init__(self, path):
        self.fh = open(path, "w", newline="")
        self.writer = csv.writer(self.fh)
        self.writer.writerow(CSV_HEADER)

    def write(self, rows):
        for r in rows:
            self.writer.writerow([r.task, r.agent, r.seed, r.attempt, repr(r.reward),
                                  repr(r.best_reward), repr(r.regret), repr(r.plan_ms)])
        self.fh.flush()

    def close(self):
        self.fh.close()


def read_results(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_HEADER:
            raise ValueError(f"{path}: unexpected header {reader.fieldnames}")
        return [ResultRow(r["task"], r["agent"], int(r["seed"]), int(r["attempt"]), float(r["reward"]),
                          float(r["best_reward"]), float(r["regret"]), float(r["plan_ms"])) for r in reader]
