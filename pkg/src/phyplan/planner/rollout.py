"""Skill chaining with learned (or oracle) skill models."""

import math

import numpy as np

from phyplan.adapt.gp import ucb_correct
from phyplan.worldsim.chains import run_chain
from phyplan.worldsim.oracle import OracleModel
from phyplan.worldsim.tasks import reward_of


class MissingModelError(KeyError):
    pass


class ModelPhysics:
    """Chain primitives evaluated by stepping skill models at ``dt``.

    Timed skills are queried at t = 0, dt, 2dt, ... in doubling chunks until
    the termination event (pendulum at the bottom, puck at rest or past its
    limit, object down to the landing plane); the event is located by linear
    interpolation between the two bracketing steps. Models only need a
    ``predict(init, t, warn=False)`` method.
    """

    def __init__(self, models, geometry, dt=0.01, max_time=3.0, first_chunk=16):
        self.models = models
        self.l = geometry["pendulum_length"]
        self.m1 = geometry["m1"]
        self.m2 = geometry["m2"]
        self.dt = dt
        self.max_time = max_time
        self.first_chunk = first_chunk

    def _model(self, skill):
        try:
            return self.models[skill]
        except KeyError:
            raise MissingModelError(f"no model for skill {skill!r}") from None

    def _march(self, skill, init, events):
        """First crossing of any event function to <= 0.

        ``events(out)`` maps an (n, outputs) block to an (n, k) array.
        Returns (interpolated outputs, time).
        """
        model = self._model(skill)
        n_max = int(math.ceil(self.max_time / self.dt))
        done, chunk = 0, self.first_chunk
        prev_out = prev_ev = None
        while done <= n_max:
            steps = np.arange(done, min(done + chunk, n_max + 1))
            out = np.atleast_2d(model.predict(init, steps * self.dt, warn=False))
            ev = np.atleast_2d(events(out))
            hit = np.flatnonzero(np.any(ev <= 0.0, axis=1))
            if hit.size:
                i = hit[0]
                if i == 0 and prev_out is None:
                    return out[0], 0.0
                o0, e0 = (out[i - 1], ev[i - 1]) if i > 0 else (prev_out, prev_ev)
                o1, e1 = out[i], ev[i]
                # earliest crossing among the events that fired
                fracs = [e0[j] / (e0[j] - e1[j]) for j in range(len(e1)) if e1[j] <= 0.0 and e0[j] > e1[j]]
                frac = min(fracs) if fracs else 1.0
                frac = min(max(frac, 0.0), 1.0)
                t = (steps[i] - 1 + frac) * self.dt
                return o0 + frac * (o1 - o0), t
            prev_out, prev_ev = out[-1], ev[-1]
            done += len(steps)
            chunk *= 2
        return prev_out, n_max * self.dt

    def swing(self, theta):
        out, t = self._march("swinging", [theta], lambda o: o[:, :1])
        return abs(float(out[1])) * self.l, t

    def hit(self, v):
        return max(float(self._model("hitting").predict([self.m1, self.m2, v], warn=False)[0]), 0.0)

    def slide(self, v0, limit):
        if v0 <= 0.0:
            return 0.0, 0.0, 0.0
        out, t = self._march("sliding", [v0], lambda o: np.stack([o[:, 1], limit - o[:, 0]], axis=1))
        x, v = float(out[0]), max(float(out[1]), 0.0)
        if x >= limit - 1e-12 and v > 0.0:
            return limit, v, t
        return min(x, limit), 0.0, t

    def throw(self, v_hor, v_ver, drop):
        out, t = self._march("throwing", [v_hor, v_ver], lambda o: o[:, 1:2] + drop)
        return float(out[2]), float(out[0]), t

    def bounce(self, e, theta_w, v_ver, v_hor):
        out = self._model("bouncing").predict([e, theta_w, v_ver, v_hor], warn=False)
        return float(out[0]), float(out[1])


def oracle_models(task, slow=False):
    """Exact skill predictors with the task's physical constants."""
    geo = task.geometry
    return {
        "swinging": OracleModel("swinging", {"l": geo["pendulum_length"]}, slow),
        "sliding": OracleModel("sliding", {"mu": geo["mu"]}, slow),
        "throwing": OracleModel("throwing", {}, slow),
        "bouncing": OracleModel("bouncing", {}, slow),
        "hitting": OracleModel("hitting", {"e_c": geo["hit_restitution"]}, slow),
    }


def complete_action(node, task, rng):
    """The node's partial action with the remaining dimensions drawn uniformly."""
    fixed = len(node.partial_action)
    rest = rng.uniform(task.lower[fixed:], task.upper[fixed:]) if fixed < task.n_dims else np.zeros(0)
    return np.concatenate([np.asarray(node.partial_action, dtype=float), rest])


def predicted_reward(task, action, models, dt=0.01):
    """Reward of the final state predicted by chaining ``models``."""
    final, _ = run_chain(task, action, ModelPhysics(models, task.geometry, dt))
    return reward_of(final, task)


def rollout_value(task, action, models, gp, cfg):
    rv = predicted_reward(task, action, models, cfg.t_query_step)
    if gp is None:
        return rv
    return float(ucb_correct(gp, task.to_unit(action), rv, cfg.beta))


def pinn_rollout(node, task, models, gp, cfg, rng):
    """Complete the node's action, chain the skill models, add the GP-UCB term.

    ``gp=None`` disables the correction. Returns (value, completed action).
    """
    missing = [s for s in set(task.skill_chain) if s not in models]
    if missing:
        raise MissingModelError(f"no model for skills {sorted(missing)}")
    action = complete_action(node, task, rng)
    return rollout_value(task, action, models, gp, cfg), action
