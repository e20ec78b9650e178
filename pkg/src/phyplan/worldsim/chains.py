"""Skill chains of the four tasks, written once against a physics backend.

A backend provides five primitives, all in the plane of motion:

* ``swing(theta)`` -> (bob speed at the bottom, duration)
* ``hit(v)`` -> speed of the struck object
* ``slide(v0, limit)`` -> (distance, end speed, duration); stops at rest or
  after ``limit`` metres, whichever comes first
* ``throw(v_hor, v_ver, drop)`` -> (horizontal distance, end vertical
  velocity, duration) until the object has fallen ``drop`` metres
* ``bounce(e, theta_w, v_ver, v_hor)`` -> (v_ver, v_hor)

:class:`ExactPhysics` evaluates them in closed form; the planner supplies a
backend that steps learned skill models instead.
"""

import math

import numpy as np

from phyplan.skills.spec import GRAVITY
from phyplan.worldsim.oracle import bounce_velocity, hitting_velocities, pendulum_exact, pendulum_quarter_period
from phyplan.worldsim.tasks import WorldState


class ExactPhysics:
    """Closed-form primitives (energy conservation, kinematics, impulses)."""

    def __init__(self, geometry):
        self.l = geometry["pendulum_length"]
        self.mu = geometry["mu"]
        self.e_c = geometry["hit_restitution"]
        self.m1 = geometry["m1"]
        self.m2 = geometry["m2"]
        self.g = GRAVITY

    def swing(self, theta):
        speed = math.sqrt(2.0 * self.g * self.l * (1.0 - math.cos(theta)))
        return speed, float(pendulum_quarter_period(theta, self.l, self.g))

    def hit(self, v):
        return float(hitting_velocities(self.m1, self.m2, v, self.e_c)[1])

    def slide(self, v0, limit):
        if v0 <= 0.0:
            return 0.0, 0.0, 0.0
        decel = self.mu * self.g
        d_stop = v0 * v0 / (2.0 * decel)
        if d_stop <= limit:
            return d_stop, 0.0, v0 / decel
        v_end = math.sqrt(max(v0 * v0 - 2.0 * decel * limit, 0.0))
        return limit, v_end, (v0 - v_end) / decel

    def throw(self, v_hor, v_ver, drop):
        g = self.g
        t = (v_ver + math.sqrt(v_ver * v_ver + 2.0 * g * max(drop, 0.0))) / g
        return v_hor * t, v_ver - g * t, t

    def bounce(self, e, theta_w, v_ver, v_hor):
        out_ver, out_hor = bounce_velocity(e, theta_w, v_ver, v_hor)
        return float(out_ver), float(out_hor)


def _unit(vx, vz):
    norm = math.hypot(vx, vz)
    if norm == 0.0:
        return 1.0, 0.0
    return vx / norm, vz / norm


class Chain:
    """Mutable object state threaded through one task's skill chain.

    ``rng`` and ``sigma`` add Gaussian noise to the velocity at each skill
    transition. With ``record`` the trajectory is sampled in closed form,
    which is only meaningful for :class:`ExactPhysics`.
    """

    def __init__(self, task, physics, rng=None, sigma=0.0, record=False, samples=12):
        self.task = task
        self.geo = task.geometry
        self.physics = physics
        self.rng = rng
        self.sigma = sigma
        self.record = record
        self.samples = samples
        self.pos = task.start.copy()
        self.vel = np.zeros(3)
        self.phase = "resting"
        self.t = 0.0
        self.bob_velocity = np.zeros(3)
        self.trajectory = []
        self._log()

    @property
    def state(self):
        return WorldState(self.pos.copy(), self.vel.copy(), self.phase)

    def _log(self):
        if self.record:
            self.trajectory.append((self.t, self.state))

    def _log_at(self, t, pos, vel, phase):
        if self.record:
            self.trajectory.append((t, WorldState(pos, vel, phase)))

    def _kick(self, vel):
        if self.sigma > 0.0:
            vel = vel + self.rng.normal(0.0, self.sigma, 3)
        return vel

    def place(self, pos, phase):
        """Set the initial position before any skill has run."""
        self.pos = np.asarray(pos, dtype=float)
        self.phase = phase
        self.trajectory.clear()
        self._log()

    def swing(self, theta, phi=0.0, carries_object=False):
        """Release the pendulum from ``theta``; the bob reaches the bottom at
        the object's position moving along bearing ``phi``."""
        speed, duration = self.physics.swing(theta)
        dx, dz = math.cos(phi), math.sin(phi)
        if self.record and carries_object:
            l, g = self.geo["pendulum_length"], GRAVITY
            pivot = self.pos + np.array([0.0, l, 0.0])
            if self.t == 0.0:
                release = pivot + l * np.array([-math.sin(theta) * dx, -math.cos(theta), -math.sin(theta) * dz])
                self.place(release, "attached_to_pendulum")
                self.pos = pivot - np.array([0.0, l, 0.0])
            for t in np.linspace(0.0, duration, self.samples)[1:-1]:
                th, om = pendulum_exact(theta, t, l, g)
                off = np.array([-math.sin(th) * dx, -math.cos(th), -math.sin(th) * dz]) * l
                v = -om * l * np.array([math.cos(th) * dx, -math.sin(th), math.cos(th) * dz])
                self._log_at(self.t + t, pivot + off, v, "attached_to_pendulum")
        self.t += duration
        self.bob_velocity = self._kick(speed * np.array([dx, 0.0, dz]))
        if carries_object:
            self.vel = self.bob_velocity.copy()
            self.phase = "airborne"
        self._log()

    def hit(self):
        v = math.hypot(self.bob_velocity[0], self.bob_velocity[2])
        ux, uz = _unit(self.bob_velocity[0], self.bob_velocity[2])
        speed = self.physics.hit(v)
        self.vel = self._kick(speed * np.array([ux, 0.0, uz]))
        self.phase = "sliding"
        self._log()

    def slide(self, limit):
        """Slide along the current heading; True if ``limit`` was reached moving."""
        speed = math.hypot(self.vel[0], self.vel[2])
        ux, uz = _unit(self.vel[0], self.vel[2])
        dist, v_end, duration = self.physics.slide(speed, max(limit, 0.0))
        if self.record and duration > 0.0:
            decel = self.geo["mu"] * GRAVITY
            for t in np.linspace(0.0, duration, self.samples)[1:-1]:
                s = speed * t - 0.5 * decel * t * t
                v = speed - decel * t
                self._log_at(self.t + t, self.pos + s * np.array([ux, 0.0, uz]),
                             v * np.array([ux, 0.0, uz]), "sliding")
        self.t += duration
        self.pos = self.pos + dist * np.array([ux, 0.0, uz])
        moving = v_end > 0.0
        self.vel = v_end * np.array([ux, 0.0, uz])
        self.phase = "sliding" if moving else "resting"
        self._log()
        return moving

    def throw(self, drop, land=True):
        """Projectile flight until the object has fallen ``drop`` metres.

        With ``land`` the object comes to rest there; otherwise it keeps its
        velocity for the next skill (a bounce).
        """
        v_hor = math.hypot(self.vel[0], self.vel[2])
        ux, uz = _unit(self.vel[0], self.vel[2])
        v_ver = self.vel[1]
        self.phase = "airborne"
        dist, v_ver_end, duration = self.physics.throw(v_hor, v_ver, drop)
        if self.record and duration > 0.0:
            for t in np.linspace(0.0, duration, self.samples)[1:-1]:
                y = v_ver * t - 0.5 * GRAVITY * t * t
                pos = self.pos + np.array([v_hor * t * ux, y, v_hor * t * uz])
                self._log_at(self.t + t, pos, np.array([v_hor * ux, v_ver - GRAVITY * t, v_hor * uz]), "airborne")
        self.t += duration
        self.pos = self.pos + np.array([dist * ux, -drop, dist * uz])
        self.vel = np.array([v_hor * ux, v_ver_end, v_hor * uz])
        if land:
            self._log_at(self.t, self.pos.copy(), self.vel.copy(), "airborne")
            self.vel = np.zeros(3)
            self.phase = "resting"
        self._log()

    def bounce(self, e, theta_w):
        v_ver, v_hor = self.physics.bounce(e, theta_w, self.vel[1], self.vel[0])
        self.vel = self._kick(np.array([v_hor, v_ver, self.vel[2]]))
        self.phase = "airborne"
        self._log()

    def fall_in_gap(self, x_center):
        self.pos = np.array([x_center, 0.0, self.pos[2]])
        self.vel = np.zeros(3)
        self.phase = "in_gap"
        self._log()

    def transition(self):
        """Noise at a hand-off that changes no other state (slide to slide)."""
        self.vel = self._kick(self.vel)
        self.vel[1] = 0.0


def _edge_limit(pos, vel, edge_x):
    ux, _ = _unit(vel[0], vel[2])
    if ux <= 0.0:
        return math.inf
    return (edge_x - pos[0]) / ux


def _launch(c, a):
    theta, phi = a
    c.swing(theta, phi, carries_object=True)
    c.throw(c.pos[1])


def _slide(c, a):
    theta, phi = a
    c.swing(theta, phi)
    c.hit()
    if c.slide(_edge_limit(c.pos, c.vel, c.geo["table_edge"])):
        c.transition()
        c.throw(c.pos[1])


def _bounce(c, a):
    height, theta_w = a
    c.place(c.pos + np.array([0.0, height, 0.0]), "airborne")
    c.throw(height, land=False)
    c.bounce(c.geo["restitution"], theta_w)
    c.throw(c.geo["wedge_height"])


def _bridge(c, a):
    theta, x_bridge = a
    geo = c.geo
    gap_lo = geo["gap_start"]
    gap_hi = gap_lo + geo["gap_width"]
    half = 0.5 * geo["bridge_length"]
    c.swing(theta, 0.0)
    c.hit()
    if not c.slide(gap_lo - c.pos[0]):
        return
    if not (x_bridge - half <= gap_lo and x_bridge + half >= gap_hi):
        c.fall_in_gap(0.5 * (gap_lo + gap_hi))
        return
    c.transition()
    if c.slide(_edge_limit(c.pos, c.vel, geo["table_edge"])):
        c.transition()
        c.throw(c.pos[1])


CHAINS = {"launch": _launch, "slide": _slide, "bounce": _bounce, "bridge": _bridge}


def run_chain(task, action, physics, rng=None, sigma=0.0, record=False):
    """Final :class:`WorldState` and the (possibly empty) trajectory."""
    chain = Chain(task, physics, rng, sigma, record)
    CHAINS[task.name](chain, task.action_vector(action))
    return chain.state, chain.trajectory
