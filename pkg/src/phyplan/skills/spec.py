"""Skill schemas and their governing-equation residuals."""

from dataclasses import dataclass, replace

import numpy as np

from phyplan.numerics import autodiff as ad

GRAVITY = 9.81

SKILL_NAMES = ("swinging", "sliding", "throwing", "bouncing", "hitting")


class UnknownSkillError(ValueError):
    pass


class DataOnlySkillError(ValueError):
    """A physics-loss operation was requested for a collision skill."""


@dataclass(frozen=True)
class PhysicalParam:
    name: str
    value: float  # true value when known, initial guess otherwise
    known: bool = True


@dataclass(frozen=True)
class SkillSpec:
    name: str
    input_fields: tuple
    output_fields: tuple
    has_physics_loss: bool
    physical_params: tuple = ()
    time_index: int = None
    # sliding only: admissible t_query grows linearly with this input field
    time_scale_field: str = None

    @property
    def n_inputs(self):
        return len(self.input_fields)

    @property
    def n_outputs(self):
        return len(self.output_fields)

    @property
    def unknown_params(self):
        return tuple(p.name for p in self.physical_params if not p.known)

    @property
    def fields(self):
        return self.input_fields + self.output_fields

    def param_values(self):
        return {p.name: p.value for p in self.physical_params}

    def with_params(self, **values):
        """Fix the named physical parameters to known values."""
        return self._update(values, known=True)

    def with_unknown(self, **guesses):
        """Mark the named parameters unknown, starting from the given guesses."""
        return self._update(guesses, known=False)

    def data_only(self):
        return replace(self, has_physics_loss=False)

    def _update(self, values, known):
        names = {p.name for p in self.physical_params}
        bad = set(values) - names
        if bad:
            raise KeyError(f"{self.name} has no physical parameters {sorted(bad)}")
        params = tuple(
            PhysicalParam(p.name, float(values[p.name]), known) if p.name in values else p
            for p in self.physical_params
        )
        return replace(self, physical_params=params)


def build_skill(name, **known):
    """Schema for one of the five skills; keyword arguments fix parameters.

    Swinging's pendulum length ``l`` and sliding's friction coefficient
    ``mu`` start unknown; pass e.g. ``build_skill("sliding", mu=0.2)`` to fix
    them. Gravity is always known.
    """
    g = PhysicalParam("g", GRAVITY)
    if name == "swinging":
        spec = SkillSpec(
            name, ("theta_init", "t_query"), ("theta", "omega"), True,
            (g, PhysicalParam("l", 1.0, known=False)), time_index=1,
        )
    elif name == "sliding":
        spec = SkillSpec(
            name, ("v_init", "t_query"), ("x", "v"), True,
            (g, PhysicalParam("mu", 0.1, known=False)), time_index=1,
            time_scale_field="v_init",
        )
    elif name == "throwing":
        spec = SkillSpec(
            name, ("v_hor_init", "v_ver_init", "t_query"), ("v_ver", "y", "x"), True,
            (g,), time_index=2,
        )
    elif name == "bouncing":
        spec = SkillSpec(name, ("e", "theta_w", "v_ver_init", "v_hor_init"), ("v_ver", "v_hor"), False)
    elif name == "hitting":
        spec = SkillSpec(name, ("m1", "m2", "v_init"), ("v",), False)
    else:
        raise UnknownSkillError(f"unknown skill {name!r}; expected one of {SKILL_NAMES}")
    if "g" in known:
        raise ValueError("gravity is a fixed constant")
    return spec.with_params(**known) if known else spec


def _stack(cols):
    if any(isinstance(c, ad.Var) for c in cols):
        return ad.concat([c.reshape(-1, 1) if isinstance(c, ad.Var) else np.reshape(c, (-1, 1)) for c in cols], axis=1)
    return np.stack(cols, axis=-1)


def physics_residual(spec, params, inputs, outputs, d_outputs_dt):
    """First-order residuals of the skill's governing equations.

    Arrays are (N, fields) or single vectors; values may be autodiff
    ``Var`` objects, in which case a ``Var`` is returned. ``params`` maps
    physical-parameter names to values.

    * swinging: dtheta/dt - omega, domega/dt + (g/l) sin(theta)
    * sliding:  dx/dt - v,         dv/dt + mu g  (moving regime, v > 0)
    * throwing: dv_ver/dt + g,     dy/dt - v_ver,   dx/dt - v_hor_init
    """
    if not spec.has_physics_loss:
        raise DataOnlySkillError(f"{spec.name} is learned from data only")
    single = np.ndim(ad.value(outputs)) == 1
    if single:
        inputs = np.reshape(ad.value(inputs), (1, -1))
        outputs = np.reshape(ad.value(outputs), (1, -1))
        d_outputs_dt = np.reshape(ad.value(d_outputs_dt), (1, -1))
    g = params["g"]
    if spec.name == "swinging":
        theta, omega = outputs[:, 0], outputs[:, 1]
        res = [d_outputs_dt[:, 0] - omega, d_outputs_dt[:, 1] + g / params["l"] * ad.sin(theta)]
    elif spec.name == "sliding":
        v = outputs[:, 1]
        res = [d_outputs_dt[:, 0] - v, d_outputs_dt[:, 1] + params["mu"] * g]
    elif spec.name == "throwing":
        v_hor0 = ad.value(inputs)[:, 0]
        res = [
            d_outputs_dt[:, 0] + g,
            d_outputs_dt[:, 1] - outputs[:, 0],
            d_outputs_dt[:, 2] - v_hor0,
        ]
    else:  # pragma: no cover - guarded by has_physics_loss
        raise DataOnlySkillError(spec.name)
    out = _stack(res)
    return out[0] if single and not isinstance(out, ad.Var) else out
