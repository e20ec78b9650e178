"""Physics-informed skill models: losses, training, prediction, storage."""

import io
import logging
import struct
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from phyplan.numerics import autodiff as ad
from phyplan.numerics.lbfgs import LBFGSConfig, lbfgs_minimize
from phyplan.numerics.network import (
    DenseNetwork,
    forward,
    fused_tangent_forward,
    table1_sizes,
    xavier_init,
)
from phyplan.numerics.serialize import FormatError, read_network, write_network, _read, _read_str, _write_str
from phyplan.skills.data import CollocationSet, data_bounds, sample_collocation
from phyplan.skills.spec import DataOnlySkillError, build_skill, physics_residual

log = logging.getLogger(__name__)

SKILL_MAGIC = b"PHYPLAN-SKILL"


@dataclass(frozen=True)
class TrainingReport:
    data_loss: float = float("nan")
    physics_loss: float = 0.0
    iterations: int = 0
    evaluations: int = 0
    status: str = "untrained"


@dataclass(frozen=True)
class InputScaler:
    """Affine map of each input field from [lower, upper] onto [-1, 1]."""

    lower: np.ndarray
    upper: np.ndarray

    @property
    def half_range(self):
        half = 0.5 * (np.asarray(self.upper) - np.asarray(self.lower))
        return np.where(half > 0, half, 1.0)

    def __call__(self, x):
        mid = 0.5 * (np.asarray(self.upper) + np.asarray(self.lower))
        return (np.asarray(x, dtype=float) - mid) / self.half_range


@dataclass(frozen=True)
class SkillModel:
    spec: object
    net: DenseNetwork
    scaler: InputScaler
    learned_params: dict = field(default_factory=dict)
    report: TrainingReport = TrainingReport()

    def __post_init__(self):
        if self.net.n_inputs != self.spec.n_inputs or self.net.n_outputs != self.spec.n_outputs:
            raise ValueError("network shape does not match the skill schema")

    @property
    def name(self):
        return self.spec.name

    def physical_values(self):
        values = self.spec.param_values()
        values.update(self.learned_params)
        return values

    def evaluate(self, inputs):
        """Network outputs for raw (unscaled) input rows."""
        return forward(self.net, self.scaler(np.atleast_2d(inputs)))

    def value_and_time_derivative(self, inputs):
        inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
        direction = np.zeros(self.spec.n_inputs)
        direction[self.spec.time_index] = 1.0 / self.scaler.half_range[self.spec.time_index]
        out = fused_tangent_forward(self.net.flat(), self.net.layer_sizes, self.scaler(inputs), direction, len(inputs))
        n = len(inputs)
        return out.value[:n], out.value[n:]

    def predict(self, init, t=None, warn=True):
        """Outputs at initial condition ``init`` and time(s) ``t``.

        ``t`` may be a scalar (returns one output vector) or an array (one
        row per time). Time-free skills ignore ``t``. Sliding predictions
        hold still after the model's own stopping time.
        """
        init = np.asarray(init, dtype=float).ravel()
        ti = self.spec.time_index
        if ti is None:
            if init.size != self.spec.n_inputs:
                raise ValueError(f"{self.name} expects {self.spec.n_inputs} inputs, got {init.size}")
            return self.evaluate(init)[0]
        if init.size != self.spec.n_inputs - 1:
            raise ValueError(f"{self.name} expects {self.spec.n_inputs - 1} initial values, got {init.size}")
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        rows = np.empty((len(ts), self.spec.n_inputs))
        rows[:, :ti] = init[:ti]
        rows[:, ti + 1:] = init[ti:]
        if warn and (ts.min() < self.scaler.lower[ti] - 1e-9 or ts.max() > self.scaler.upper[ti] + 1e-9):
            warnings.warn(f"{self.name}: t outside trained range "
                          f"[{self.scaler.lower[ti]:g}, {self.scaler.upper[ti]:g}]", stacklevel=2)
        t_stop = self.stopping_time(init) if self.spec.time_scale_field is not None else None
        rows[:, ti] = ts if t_stop is None else np.minimum(ts, t_stop)
        out = self.evaluate(rows)
        if t_stop is not None:
            out[ts >= t_stop, 1] = 0.0
        return out[0] if scalar else out

    def stopping_time(self, init, grid=33):
        """First time the predicted sliding speed reaches zero, or None.

        The network is trained on the moving regime only; like the oracle,
        predictions past this time hold the position and report v = 0.
        """
        ti = self.spec.time_index
        lo, hi = self.scaler.lower[ti], self.scaler.upper[ti]
        rows = np.empty((grid, self.spec.n_inputs))
        rows[:, :ti] = init[:ti]
        rows[:, ti + 1:] = init[ti:]
        rows[:, ti] = np.linspace(lo, hi, grid)
        v = self.evaluate(rows)[:, 1]
        if v[0] <= 0.0:
            return float(lo)
        below = np.flatnonzero(v <= 0.0)
        if below.size == 0:
            return None
        k = below[0]

        def speed(t):
            rows[0, ti] = t
            return float(self.evaluate(rows[:1])[0, 1])

        return float(optimize.brentq(speed, rows[k - 1, ti], rows[k, ti], xtol=1e-9))

    def save(self, path):
        with open(path, "wb") as fh:
            fh.write(to_bytes(self))

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            return from_bytes(fh.read())


# losses -------------------------------------------------------------------


def _mean_sq(diff):
    return (diff * diff).mean()


def _loss_terms(spec, sizes, scaler, net_params, phys, data, colloc):
    xd = scaler(data.inputs)
    nd = len(xd)
    use_physics = spec.has_physics_loss and colloc is not None and len(colloc) > 0
    if use_physics:
        xc = scaler(colloc.points)
        direction = np.zeros(spec.n_inputs)
        direction[spec.time_index] = 1.0 / scaler.half_range[spec.time_index]
        out = fused_tangent_forward(net_params, sizes, np.vstack([xd, xc]), direction, len(xc))
        nc = len(xc)
        l_d = _mean_sq(out[:nd] - data.targets)
        res = physics_residual(spec, phys, colloc.points, out[nd:nd + nc], out[nd + nc:])
        return l_d, _mean_sq(res)
    out = fused_tangent_forward(net_params, sizes, xd, None, 0)
    return _mean_sq(out - data.targets), None


def data_loss(model, data):
    """Mean squared error over every row and output component."""
    if len(data) == 0:
        raise ValueError("empty dataset")
    pred = model.evaluate(data.inputs)
    return float(np.mean((np.asarray(data.targets) - pred) ** 2))


def physics_loss(model, colloc):
    """Mean squared residual component over the collocation points.

    ``model`` needs ``spec``, ``physical_values()`` and
    ``value_and_time_derivative(points)``; analytic evaluators qualify too.
    """
    if not model.spec.has_physics_loss:
        raise DataOnlySkillError(f"{model.spec.name} is learned from data only")
    points = colloc.points if isinstance(colloc, CollocationSet) else np.atleast_2d(colloc)
    if len(points) == 0:
        raise ValueError("empty collocation set")
    y, dy = model.value_and_time_derivative(points)
    res = physics_residual(model.spec, model.physical_values(), points, y, dy)
    return float(np.mean(np.square(res)))


def total_loss(model, data, colloc=None):
    """Data loss plus physics loss (the latter only for physics skills)."""
    l_d = data_loss(model, data)
    if not model.spec.has_physics_loss or colloc is None:
        return l_d
    return l_d + physics_loss(model, colloc)


def loss_objective(spec, sizes, scaler, data, colloc):
    """Scalar objective of the flat trainable vector (network then unknowns)."""
    n_net = sum(sizes[k + 1] * sizes[k] + sizes[k + 1] for k in range(len(sizes) - 1))
    unknown = spec.unknown_params
    known = spec.param_values()

    def objective(p):
        phys = dict(known)
        for i, name in enumerate(unknown):
            phys[name] = p[n_net + i]
        l_d, l_p = _loss_terms(spec, sizes, scaler, p[:n_net], phys, data, colloc)
        return l_d if l_p is None else l_d + l_p

    return objective


# training -----------------------------------------------------------------


def train(spec, data, colloc=None, cfg=None, seed=0, layer_sizes=None, colloc_ratio=4):
    """Fit a skill network (and any unknown physical parameters).

    With a physics skill and no collocation set, one is sampled with
    ``colloc_ratio`` points per data row. Returns a :class:`SkillModel`;
    a diverged or stalled run still returns the best parameters found, with
    the optimizer status recorded in ``model.report.status``.
    """
    data.check_spec(spec)
    if len(data) == 0:
        raise ValueError("empty dataset")
    cfg = cfg or LBFGSConfig()
    sizes = tuple(layer_sizes or table1_sizes(spec.n_inputs, spec.n_outputs))
    if spec.has_physics_loss:
        if colloc is None:
            colloc = sample_collocation(spec, data, ratio=colloc_ratio, seed=seed + 1)
        lo = np.minimum(data_bounds(data.inputs)[0], colloc.points.min(axis=0))
        hi = np.maximum(data_bounds(data.inputs)[1], colloc.points.max(axis=0))
    else:
        colloc = None
        lo, hi = data_bounds(data.inputs)
    scaler = InputScaler(lo, hi)

    net0 = xavier_init(sizes, seed)
    unknown = spec.unknown_params
    guesses = spec.param_values()
    p0 = np.concatenate([net0.flat(), [guesses[n] for n in unknown]])
    objective = loss_objective(spec, sizes, scaler, data, colloc)

    def fun(p):
        return ad.gradient(objective, p)

    result = lbfgs_minimize(fun, p0, cfg)
    n_net = net0.n_params
    net = DenseNetwork.from_flat(sizes, result.x[:n_net])
    learned = {name: float(result.x[n_net + i]) for i, name in enumerate(unknown)}
    phys = dict(guesses, **learned)
    l_d, l_p = _loss_terms(spec, sizes, scaler, result.x[:n_net], phys, data, colloc)
    report = TrainingReport(
        data_loss=float(ad.value(l_d)),
        physics_loss=0.0 if l_p is None else float(ad.value(l_p)),
        iterations=result.iterations,
        evaluations=result.evaluations,
        status=result.status,
    )
    log.info("trained %s: L_D=%.3e L_P=%.3e after %d iterations (%s)",
             spec.name, report.data_loss, report.physics_loss, report.iterations, report.status)
    return SkillModel(spec, net, scaler, learned, report)


def identify_parameter(spec, data, cfg=None, seed=0, colloc=None):
    """Train jointly on data and physics and read back the unknown parameters."""
    if not spec.has_physics_loss:
        raise DataOnlySkillError(f"{spec.name} has no governing equation to identify parameters from")
    if not spec.unknown_params:
        raise ValueError(f"{spec.name} has no unknown physical parameters")
    model = train(spec, data, colloc, cfg, seed)
    return model, dict(model.learned_params)


def predict(model, init, t=None):
    return model.predict(init, t)


# storage ------------------------------------------------------------------


def to_bytes(model):
    """Network record followed by the skill trailer.

    Trailer: ``PHYPLAN-SKILL``, u8-prefixed skill name, u32 input count,
    lower then upper normalization bounds (f64 each), known physical
    parameters as a u32 count of (u16-prefixed name, f64), then the report:
    f64 data loss, f64 physics loss, u32 iterations, u8-prefixed status.
    """
    buf = io.BytesIO()
    write_network(buf, model.net, model.learned_params)
    buf.write(SKILL_MAGIC)
    _write_str(buf, model.spec.name)
    n = model.spec.n_inputs
    buf.write(struct.pack("<I", n))
    buf.write(np.asarray(model.scaler.lower, dtype="<f8").tobytes())
    buf.write(np.asarray(model.scaler.upper, dtype="<f8").tobytes())
    known = {p.name: p.value for p in model.spec.physical_params if p.known}
    buf.write(struct.pack("<I", len(known)))
    for key in sorted(known):
        _write_str(buf, key, "<H")
        buf.write(struct.pack("<d", known[key]))
    r = model.report
    buf.write(struct.pack("<ddI", r.data_loss, r.physics_loss, r.iterations))
    _write_str(buf, r.status)
    return buf.getvalue()


def from_bytes(raw):
    buf = io.BytesIO(raw)
    net, learned = read_network(buf)
    if buf.read(len(SKILL_MAGIC)) != SKILL_MAGIC:
        raise FormatError("missing skill trailer")
    name = _read_str(buf)
    (n,) = _read(buf, "<I")
    lower = np.array(_read(buf, f"<{n}d"))
    upper = np.array(_read(buf, f"<{n}d"))
    (n_known,) = _read(buf, "<I")
    known = {}
    for _ in range(n_known):
        key = _read_str(buf, "<H")
        (known[key],) = _read(buf, "<d")
    l_d, l_p, iters = _read(buf, "<ddI")
    status = _read_str(buf)
    spec = build_skill(name)
    fixed = {k: v for k, v in known.items() if k != "g"}
    if fixed:
        spec = spec.with_params(**fixed)
    if learned:
        spec = spec.with_unknown(**learned)
    report = TrainingReport(l_d, l_p, iters, 0, status)
    return SkillModel(spec, net, InputScaler(lower, upper), dict(learned), report)
