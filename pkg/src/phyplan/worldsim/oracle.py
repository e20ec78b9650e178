"""Ground-truth skill physics and training-data generation."""

import math

import numpy as np
from scipy import special

from phyplan.skills.data import Dataset
from phyplan.skills.spec import GRAVITY, SKILL_NAMES, UnknownSkillError, build_skill

RK4_STEP = 1e-4

DEFAULT_PARAMS = {
    "swinging": {"l": 0.5},
    "sliding": {"mu": 0.2},
    "throwing": {},
    "bouncing": {},
    "hitting": {"e_c": 0.9},
}

# sampling box per input field; sliding's t_query upper bound is a cap, the
# actual limit being the stopping time v_init / (mu g)
DEFAULT_BOUNDS = {
    "swinging": {"theta_init": (-0.25, 1.55), "t_query": (0.0, 0.5)},
    "sliding": {"v_init": (0.0, 3.0), "t_query": (0.0, 1.6)},
    "throwing": {"v_hor_init": (0.0, 5.0), "v_ver_init": (-5.5, 4.0), "t_query": (0.0, 1.0)},
    "bouncing": {"e": (0.5, 1.0), "theta_w": (0.2, 1.4), "v_ver_init": (-6.0, -0.5), "v_hor_init": (-1.0, 1.0)},
    "hitting": {"m1": (0.05, 0.2), "m2": (0.05, 0.2), "v_init": (0.0, 3.5)},
}


def _params(skill, params):
    merged = {"g": GRAVITY}
    merged.update(DEFAULT_PARAMS[skill])
    merged.update(params or {})
    return merged


def _pendulum_rhs(theta, omega, k):
    return omega, -k * np.sin(theta)


def _rk4(theta, omega, h, k):
    a1, b1 = _pendulum_rhs(theta, omega, k)
    a2, b2 = _pendulum_rhs(theta + 0.5 * h * a1, omega + 0.5 * h * b1, k)
    a3, b3 = _pendulum_rhs(theta + 0.5 * h * a2, omega + 0.5 * h * b2, k)
    a4, b4 = _pendulum_rhs(theta + h * a3, omega + h * b3, k)
    return (theta + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4),
            omega + h / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4))


def pendulum_rk4(theta0, t, l, g=GRAVITY, h=RK4_STEP):
    """Angle and angular velocity of pendulums released from rest.

    ``theta0`` and ``t`` broadcast against each other. All trajectories are
    stepped together with fixed step ``h``; each is read off after
    ``floor(t/h)`` steps and finished with one partial step.
    """
    theta0, t = np.broadcast_arrays(np.asarray(theta0, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    shape = theta0.shape
    th0 = theta0.ravel()
    tt = t.ravel()
    k = g / l
    n_steps = np.floor(tt / h + 1e-9).astype(int)
    order = np.argsort(n_steps, kind="stable")
    res_th = th0.copy()
    res_om = np.zeros_like(th0)
    th, om = th0.copy(), np.zeros_like(th0)
    ptr = 0
    while ptr < len(order) and n_steps[order[ptr]] == 0:
        ptr += 1
    for step in range(1, int(n_steps.max(initial=0)) + 1):
        th, om = _rk4(th, om, h, k)
        while ptr < len(order) and n_steps[order[ptr]] == step:
            i = order[ptr]
            res_th[i], res_om[i] = th[i], om[i]
            ptr += 1
    rest = tt - n_steps * h
    res_th, res_om = _rk4(res_th, res_om, rest, k)
    return res_th.reshape(shape), res_om.reshape(shape)


def pendulum_exact(theta0, t, l, g=GRAVITY):
    """Closed-form pendulum from rest via Jacobi elliptic functions."""
    theta0, t = np.broadcast_arrays(np.asarray(theta0, dtype=float), np.asarray(t, dtype=float))
    w0 = np.sqrt(g / l)
    k = np.sin(0.5 * np.abs(theta0))
    m = k * k
    quarter = special.ellipk(m)
    sn, cn, _, _ = special.ellipj(quarter - w0 * t, m)
    sgn = np.sign(theta0)
    theta = sgn * 2.0 * np.arcsin(np.clip(k * sn, -1.0, 1.0))
    omega = -sgn * 2.0 * k * w0 * cn
    return theta, omega


def pendulum_quarter_period(theta0, l, g=GRAVITY):
    k = np.sin(0.5 * np.abs(theta0))
    return np.sqrt(l / g) * special.ellipk(k * k)


def bounce_velocity(e, theta_w, v_ver, v_hor):
    """Reflect (v_hor, v_ver) off a wedge face inclined at ``theta_w``.

    The face normal is (-sin theta_w, cos theta_w) in (horizontal, vertical)
    coordinates, so a ball falling on the face is deflected toward -x.
    Tangential velocity is kept; the normal component is scaled by -e.
    """
    n_h, n_v = -np.sin(theta_w), np.cos(theta_w)
    vn = v_hor * n_h + v_ver * n_v
    impulse = np.where(vn < 0.0, (1.0 + e) * vn, 0.0)
    return v_ver - impulse * n_v, v_hor - impulse * n_h


def hitting_velocities(m1, m2, v_init, e_c):
    """(striker, struck) speeds after a central collision with a resting object."""
    total = m1 + m2
    return (m1 - e_c * m2) * v_init / total, (1.0 + e_c) * m1 * v_init / total


def sliding_state(v0, t, mu, g=GRAVITY):
    decel = mu * g
    t_stop = np.where(decel > 0, v0 / np.where(decel > 0, decel, 1.0), np.inf)
    te = np.minimum(t, t_stop)
    return v0 * te - 0.5 * decel * te * te, np.maximum(v0 - decel * te, 0.0)


def oracle_predict(skill, params, init, t=None):
    """Ground-truth outputs of ``skill`` (same field order as the skill schema).

    ``init`` holds the non-time inputs, either one vector or rows; ``t``
    broadcasts against the rows. Swinging is integrated with RK4 at
    1e-4 s; the other skills use closed forms.
    """
    if skill not in SKILL_NAMES:
        raise UnknownSkillError(f"unknown skill {skill!r}")
    p = _params(skill, params)
    init = np.asarray(init, dtype=float)
    single = init.ndim == 1 and np.ndim(t) == 0
    rows = np.atleast_2d(init)
    if skill in ("bouncing", "hitting"):
        if skill == "bouncing":
            out = np.stack(bounce_velocity(rows[:, 0], rows[:, 1], rows[:, 2], rows[:, 3]), axis=-1)
        else:
            out = hitting_velocities(rows[:, 0], rows[:, 1], rows[:, 2], p["e_c"])[1][:, None]
        return out[0] if init.ndim == 1 else out
    if t is None:
        raise ValueError(f"{skill} needs a query time")
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be non-negative")
    g = p["g"]
    if init.ndim == 1:
        cols = [np.full(np.shape(np.atleast_1d(t)), v) for v in init]
        tt = np.atleast_1d(t)
    else:
        tt = np.broadcast_to(t, (len(rows),)) if t.ndim == 0 else t
        cols = [rows[:, j] for j in range(rows.shape[1])]
    if skill == "swinging":
        out = np.stack(pendulum_rk4(cols[0], tt, p["l"], g), axis=-1)
    elif skill == "sliding":
        out = np.stack(sliding_state(cols[0], tt, p["mu"], g), axis=-1)
    else:
        v_hor, v_ver = cols
        out = np.stack([v_ver - g * tt, v_ver * tt - 0.5 * g * tt * tt, v_hor * tt], axis=-1)
    return out[0] if single else out


def generate_dataset(skill, physical_params=None, n=1000, bounds=None, noise_sigma=0.0, seed=0):
    """Sample ``n`` oracle rows uniformly over ``bounds`` plus Gaussian noise.

    ``bounds`` maps input field names to (low, high); missing fields fall
    back to :data:`DEFAULT_BOUNDS`. For sliding, t_query is drawn below the
    stopping time so targets stay in the moving regime.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    spec = build_skill(skill)
    box = dict(DEFAULT_BOUNDS[skill])
    box.update(bounds or {})
    lo = np.empty(spec.n_inputs)
    hi = np.empty(spec.n_inputs)
    for j, name in enumerate(spec.input_fields):
        lo[j], hi[j] = box[name]
        if not (np.isfinite(lo[j]) and np.isfinite(hi[j])) or hi[j] <= lo[j]:
            raise ValueError(f"degenerate bounds for {name}: {box[name]}")
    rng = np.random.default_rng(seed)
    x = lo + (hi - lo) * rng.random((n, spec.n_inputs))
    p = _params(skill, physical_params)
    if spec.time_scale_field is not None:
        j = spec.input_fields.index(spec.time_scale_field)
        ti = spec.time_index
        t_stop = x[:, j] / (p["mu"] * p["g"])
        cap = np.minimum(hi[ti], t_stop)
        x[:, ti] = lo[ti] + (cap - lo[ti]).clip(min=0.0) * (x[:, ti] - lo[ti]) / (hi[ti] - lo[ti])
    ti = spec.time_index
    if ti is None:
        y = oracle_predict(skill, p, x)
    else:
        y = oracle_predict(skill, p, np.delete(x, ti, axis=1), x[:, ti])
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be >= 0")
    if noise_sigma > 0:
        y = y + rng.normal(0.0, noise_sigma, size=y.shape)
    provenance = {"generator": "oracle", "seed": seed, "noise_sigma": noise_sigma}
    provenance.update({k: v for k, v in p.items()})
    return Dataset.for_spec(spec, x, y, **provenance)


class OracleModel:
    """Ground-truth physics behind the same ``predict`` interface as a skill model.

    The fast mode uses closed forms throughout (the elliptic-function
    pendulum instead of RK4). With ``slow=True`` every timed skill is
    integrated by scalar RK4 at ``RK4_STEP`` from t=0, which is what a
    planner without learned skills would pay per query.
    """

    def __init__(self, skill, params=None, slow=False):
        self.spec = build_skill(skill)
        self.name = skill
        self.params = _params(skill, params)
        self.slow = slow

    def physical_values(self):
        return dict(self.params)

    def predict(self, init, t=None, warn=False):
        init = np.asarray(init, dtype=float).ravel()
        if self.spec.time_index is None:
            return oracle_predict(self.name, self.params, init)
        if self.slow:
            ts = np.atleast_1d(np.asarray(t, dtype=float))
            out = _slow_integrate(self.name, self.params, init, ts)
            return out[0] if np.ndim(t) == 0 else out
        if self.name == "swinging":
            # closed form; agrees with the RK4 oracle to ~1e-14
            theta, omega = pendulum_exact(init[0], t, self.params["l"], self.params["g"])
            return np.stack([theta, omega], axis=-1)
        if np.ndim(t) == 0:
            return oracle_predict(self.name, self.params, init, float(t))
        return oracle_predict(self.name, self.params, np.broadcast_to(init, (len(t), init.size)), np.asarray(t))

    def value_and_time_derivative(self, inputs):
        """Analytic outputs and their time derivatives at raw input rows."""
        inputs = np.atleast_2d(inputs)
        ti = self.spec.time_index
        y = oracle_predict(self.name, self.params, np.delete(inputs, ti, axis=1), inputs[:, ti])
        g = self.params["g"]
        if self.name == "swinging":
            dy = np.stack([y[:, 1], -g / self.params["l"] * np.sin(y[:, 0])], axis=-1)
        elif self.name == "sliding":
            moving = y[:, 1] > 0
            dy = np.stack([y[:, 1], np.where(moving, -self.params["mu"] * g, 0.0)], axis=-1)
        else:
            dy = np.stack([np.full(len(y), -g), y[:, 0], inputs[:, 0]], axis=-1)
        return y, dy


def _slow_integrate(skill, p, init, times):
    """Scalar RK4 with python floats, sampled at ``times``."""
    h = RK4_STEP
    g = p["g"]
    if skill == "swinging":
        k = g / p["l"]

        def rhs(s):
            return (s[1], -k * math.sin(s[0]))

        state = (float(init[0]), 0.0)
    elif skill == "sliding":
        decel = p["mu"] * g

        def rhs(s):
            return (s[1], -decel if s[1] > 0.0 else 0.0)

        state = (0.0, float(init[0]))
    else:
        v_hor = float(init[0])

        def rhs(s):
            return (-g, s[0], v_hor)

        state = (float(init[1]), 0.0, 0.0)

    def step(s, dt):
        k1 = rhs(s)
        k2 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(s, k1)))
        k3 = rhs(tuple(a + 0.5 * dt * b for a, b in zip(s, k2)))
        k4 = rhs(tuple(a + dt * b for a, b in zip(s, k3)))
        new = tuple(a + dt / 6.0 * (b1 + 2 * b2 + 2 * b3 + b4) for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
        if skill == "sliding" and new[1] < 0.0:
            # stop exactly where the velocity reaches zero
            frac = s[1] / (s[1] - new[1])
            new = (s[0] + frac * (new[0] - s[0]), 0.0)
        return new

    results = np.empty((len(times), len(state)))
    t_now = 0.0
    for i in np.argsort(times, kind="stable"):
        target = float(times[i])
        while t_now + h <= target + 1e-12:
            state = step(state, h)
            t_now += h
        rest = target - t_now
        results[i] = step(state, rest) if rest > 0 else state
    return results
