"""Task definitions, their plain-text config and the reward."""

import configparser
import math
from dataclasses import dataclass, field, replace
from importlib import resources

import numpy as np

TASK_NAMES = ("launch", "bounce", "slide", "bridge")
PHASES = ("attached_to_pendulum", "sliding", "airborne", "resting", "in_gap")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class WorldState:
    position: np.ndarray
    velocity: np.ndarray
    phase: str

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=float).reshape(3)
        vel = np.asarray(self.velocity, dtype=float).reshape(3)
        if self.phase not in PHASES:
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.phase in ("resting", "in_gap"):
            vel = np.zeros(3)
        object.__setattr__(self, "position", pos)
        object.__setattr__(self, "velocity", vel)


@dataclass(frozen=True)
class GoalRegion:
    center: np.ndarray
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("goal radius must be positive")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(3))


@dataclass(frozen=True)
class SimNoise:
    sigma_velocity: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma_velocity >= 0:
            raise ValueError("sigma_velocity must be >= 0")


@dataclass(frozen=True)
class ActionDim:
    name: str
    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"action {self.name}: lower must be < upper")


@dataclass(frozen=True)
class TaskDef:
    name: str
    skill_chain: tuple
    action_dims: tuple
    geometry: dict = field(hash=False)
    goal: GoalRegion = None
    d_ref: float = None

    def __post_init__(self):
        if self.name not in TASK_NAMES:
            raise ValueError(f"unknown task {self.name!r}; expected one of {TASK_NAMES}")
        if self.d_ref is None:
            object.__setattr__(self, "d_ref", horizontal_distance(self.start, self.goal.center))
        if self.d_ref < 0:
            raise ValueError("d_ref must be non-negative")

    @property
    def start(self):
        return np.asarray(self.geometry["start"], dtype=float)

    @property
    def n_dims(self):
        return len(self.action_dims)

    @property
    def lower(self):
        return np.array([d.lower for d in self.action_dims])

    @property
    def upper(self):
        return np.array([d.upper for d in self.action_dims])

    @property
    def dim_names(self):
        return tuple(d.name for d in self.action_dims)

    def action_vector(self, action):
        """Action as an array in dimension order (accepts a mapping or a sequence)."""
        if isinstance(action, dict):
            missing = set(self.dim_names) - set(action)
            if missing:
                raise ValueError(f"{self.name}: missing action values {sorted(missing)}")
            return np.array([float(action[n]) for n in self.dim_names])
        vec = np.asarray(action, dtype=float).ravel()
        if vec.size != self.n_dims:
            raise ValueError(f"{self.name} takes {self.n_dims} action values, got {vec.size}")
        return vec

    def to_unit(self, action):
        return (self.action_vector(action) - self.lower) / (self.upper - self.lower)

    def from_unit(self, u):
        return self.lower + np.asarray(u, dtype=float) * (self.upper - self.lower)

    def with_goal(self, center, radius=None):
        """Copy with a new goal; d_ref is recomputed from the start position."""
        goal = GoalRegion(center, self.goal.radius if radius is None else radius)
        return replace(self, goal=goal, d_ref=None)

    def with_geometry(self, **values):
        geometry = dict(self.geometry)
        geometry.update(values)
        return replace(self, geometry=geometry)


def horizontal_distance(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(math.hypot(a[0] - b[0], a[2] - b[2]))


def reward_of(final_state, task):
    """1 inside the goal disc, otherwise max(0, 1 - d/d_ref) on horizontal distance."""
    d = horizontal_distance(final_state.position, task.goal.center)
    if d <= task.goal.radius:
        return 1.0
    if task.d_ref <= 0:
        return 0.0
    return max(0.0, 1.0 - d / task.d_ref)


# config -------------------------------------------------------------------


def _number(text):
    text = text.strip()
    if text.endswith("deg"):
        return math.radians(float(text[:-3]))
    return float(text)


def _numbers(text, count=None, key=""):
    try:
        values = [_number(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None
    if count is not None and len(values) != count:
        raise ConfigError(f"{key}: expected {count} values, got {len(values)}")
    return values


def parse_tasks(text, source="<config>"):
    """Parse config text into a mapping of task name to :class:`TaskDef`."""
    parser = configparser.ConfigParser(default_section="world", inline_comment_prefixes=("#",))
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    tasks = {}
    for name in parser.sections():
        if name not in TASK_NAMES:
            raise ConfigError(f"{source}: unknown task section [{name}]")
        sec = parser[name]
        dims, geometry, chain, goal = [], {}, None, None
        for key, raw in sec.items():
            where = f"{source} [{name}] {key}"
            if key == "skill_chain":
                chain = tuple(s.strip() for s in raw.split(",") if s.strip())
            elif key.startswith("action_"):
                lo, hi = _numbers(raw, 2, where)
                try:
                    dims.append(ActionDim(key[len("action_"):], lo, hi))
                except ValueError as exc:
                    raise ConfigError(f"{where}: {exc}") from None
            elif key == "goal_center":
                goal = _numbers(raw, 3, where)
            elif key == "start":
                geometry[key] = tuple(_numbers(raw, 3, where))
            else:
                geometry[key] = _numbers(raw, 1, where)[0]
        for required, value in (("skill_chain", chain), ("goal_center", goal), ("start", geometry.get("start"))):
            if value is None:
                raise ConfigError(f"{source} [{name}]: missing {required}")
        if not dims:
            raise ConfigError(f"{source} [{name}]: no action dimensions")
        try:
            tasks[name] = TaskDef(name, chain, tuple(dims), geometry,
                                  GoalRegion(goal, geometry["goal_radius"]))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"{source} [{name}]: {exc}") from None
    return tasks


def default_config_text():
    return resources.files("phyplan.worldsim").joinpath("tasks.ini").read_text()


def load_tasks(path=None):
    """Tasks from ``path``, or the packaged defaults."""
    if path is None:
        return parse_tasks(default_config_text(), "tasks.ini")
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_tasks(text, str(path))


def get_task(name, path=None):
    tasks = load_tasks(path)
    if name not in tasks:
        raise ConfigError(f"task {name!r} not defined; available: {', '.join(tasks)}")
    return tasks[name]
