"""Monte Carlo tree search over sampled continuous arms."""

import math
from dataclasses import dataclass, field

import numpy as np

from phyplan.planner.rollout import pinn_rollout


class PlannerError(ValueError):
    pass


@dataclass(frozen=True)
class PlannerConfig:
    D: int = 20
    K: int = 10
    alpha: float = math.sqrt(2.0)
    expansion_threshold: int = None
    t_query_step: float = 0.01
    beta: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.D < 1 or self.K < 1:
            raise ValueError("D and K must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be >= 0")
        if not self.t_query_step > 0:
            raise ValueError("t_query_step must be positive")
        if self.expansion_threshold is None:
            object.__setattr__(self, "expansion_threshold", self.D)
        if self.expansion_threshold < 1:
            raise ValueError("expansion_threshold must be >= 1")


@dataclass
class TreeNode:
    """One tree level per action dimension.

    ``returns[i]`` lists every value backed up through arm ``i`` (its first
    rollout included), so ``v[i]`` is always their mean and ``n[i]`` their
    count.
    """

    depth: int
    n_dims: int
    partial_action: tuple = ()
    arms: list = field(default_factory=list)
    n: list = field(default_factory=list)
    v: list = field(default_factory=list)
    children: list = field(default_factory=list)
    returns: list = field(default_factory=list)

    @property
    def terminal(self):
        return self.depth >= self.n_dims

    def child(self, i):
        return self.children[i]


def new_root(task):
    return TreeNode(0, task.n_dims)


def select_arm(node, alpha):
    """Index of argmax v_a + alpha sqrt(log(sum n) / n_a); ties go to the lowest index."""
    if not node.arms:
        raise PlannerError("cannot select from a node without arms")
    n = np.asarray(node.n, dtype=float)
    if np.any(n < 1):
        raise PlannerError("every arm needs at least one visit")
    score = np.asarray(node.v, dtype=float) + alpha * np.sqrt(math.log(n.sum()) / n)
    return int(np.argmax(score))


class _Search:
    """Per-plan state: the random stream and the best rollout seen."""

    def __init__(self, task, models, gp, cfg, rng):
        self.task, self.models, self.gp, self.cfg, self.rng = task, models, gp, cfg, rng
        self.best_value = -math.inf
        self.best_action = None
        self.path = []

    def rollout(self, node):
        value, action = pinn_rollout(node, self.task, self.models, self.gp, self.cfg, self.rng)
        if value > self.best_value:
            self.best_value, self.best_action = value, action
        return value


def expand(node, task, D, rng, evaluate=None):
    """Sample D arms uniformly over the node's dimension; evaluate each child once.

    ``evaluate(child)`` returns the child's rollout value; without it the
    children start with v = 0. Every arm starts with n = 1.
    """
    if node.terminal:
        raise PlannerError("cannot expand a terminal node")
    lo, hi = task.lower[node.depth], task.upper[node.depth]
    rng = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    for a in rng.uniform(lo, hi, D):
        child = TreeNode(node.depth + 1, node.n_dims, node.partial_action + (float(a),))
        value = evaluate(child) if evaluate is not None else 0.0
        node.arms.append(float(a))
        node.children.append(child)
        node.n.append(1)
        node.v.append(float(value))
        node.returns.append([float(value)])
    return node


def _iterate(node, search):
    cfg = search.cfg
    if node.terminal:
        return search.rollout(node)
    if len(node.arms) >= cfg.expansion_threshold:
        i = select_arm(node, cfg.alpha)
        search.path.append(i)
        rv = _iterate(node.children[i], search)
        node.v[i] = (node.v[i] * node.n[i] + rv) / (node.n[i] + 1)
        node.n[i] += 1
        node.returns[i].append(rv)
        return rv
    expand(node, search.task, cfg.D, search.rng, search.rollout)
    return search.rollout(node)


def mcts_iterate(node, task, models, gp, cfg, rng=None):
    """One search pass from ``node``; returns the rollout value it produced."""
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    return _iterate(node, _Search(task, models, gp, cfg, rng))


def plan(task, models, gp, cfg, trace=None):
    """Run K search iterations from a fresh root.

    Returns (best action, its predicted value) over every rollout performed.
    ``trace`` (a writable text stream) receives one line per iteration:
    iteration, chosen arm path, rollout value, best so far.
    """
    rng = np.random.default_rng(cfg.seed)
    root = new_root(task)
    search = _Search(task, models, gp, cfg, rng)
    for k in range(cfg.K):
        search.path = []
        rv = _iterate(root, search)
        if trace is not None:
            path = "/".join(map(str, search.path)) or "-"
            trace.write(f"{k},{path},{rv!r},{search.best_value!r}\n")
    return search.best_action, float(search.best_value)


def plan_tree(task, models, gp, cfg):
    """Like :func:`plan` but also returns the root, for inspection."""
    rng = np.random.default_rng(cfg.seed)
    root = new_root(task)
    search = _Search(task, models, gp, cfg, rng)
    for _ in range(cfg.K):
        _iterate(root, search)
    return search.best_action, float(search.best_value), root
