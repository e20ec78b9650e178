"""Executing actions in the ground-truth world."""

import csv
import warnings

import numpy as np

from phyplan.worldsim.chains import ExactPhysics, run_chain
from phyplan.worldsim.tasks import SimNoise, reward_of

TRAJECTORY_HEADER = ("t", "x", "y", "z", "vx", "vy", "vz", "phase")


def clamp_action(task, action):
    vec = task.action_vector(action)
    clipped = np.clip(vec, task.lower, task.upper)
    if not np.array_equal(clipped, vec):
        warnings.warn(f"{task.name}: action {vec.tolist()} clamped to bounds", stacklevel=3)
    return clipped


def execute_action(task, action, noise=None, record=True):
    """Run ``action`` through the exact physics.

    Returns (final state, reward, trajectory), the trajectory being a list
    of (time, WorldState) pairs (empty when ``record`` is false).
    """
    noise = noise or SimNoise()
    vec = clamp_action(task, action)
    rng = np.random.default_rng(noise.seed) if noise.sigma_velocity > 0 else None
    final, trajectory = run_chain(task, vec, ExactPhysics(task.geometry), rng, noise.sigma_velocity, record)
    return final, reward_of(final, task), trajectory


def true_reward(task, action):
    """Noise-free reward without trajectory bookkeeping."""
    return execute_action(task, action, record=False)[1]


def write_trajectory(path, trajectory):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_HEADER)
        for t, s in trajectory:
            writer.writerow([repr(float(t)), *(repr(float(v)) for v in s.position),
                             *(repr(float(v)) for v in s.velocity), s.phase])
