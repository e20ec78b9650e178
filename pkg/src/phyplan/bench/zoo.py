"""Training, saving and loading the skill models a task needs."""

import logging
import os

from phyplan.numerics.lbfgs import LBFGSConfig
from phyplan.skills.model import SkillModel, train
from phyplan.skills.spec import SKILL_NAMES, build_skill
from phyplan.worldsim.oracle import DEFAULT_PARAMS, generate_dataset

log = logging.getLogger(__name__)

# rows per skill and L-BFGS iterations used for the planning models
TRAINING_DEFAULTS = {
    "swinging": (1000, 2000),
    "sliding": (1000, 1000),
    "throwing": (1000, 2000),
    "bouncing": (1000, 1500),
    "hitting": (500, 1000),
}


class ModelFilesError(FileNotFoundError):
    pass


def model_path(directory, skill):
    return os.path.join(directory, f"{skill}.bin")


def train_default(skill, seed=0, n=None, iterations=None, params=None, noise_sigma=0.0,
                  data_only=False, colloc_ratio=4):
    """Generate oracle data and train a model with its physical constants known.

    ``params`` overrides the oracle's physical constants (and the values the
    model is told), e.g. ``{"mu": 0.3}`` for a deliberately biased slider.
    ``n`` and ``iterations`` default to :data:`TRAINING_DEFAULTS`.
    """
    n_default, it_default = TRAINING_DEFAULTS[skill]
    phys = dict(DEFAULT_PARAMS[skill])
    phys.update(params or {})
    data = generate_dataset(skill, phys, n or n_default, noise_sigma=noise_sigma, seed=seed)
    spec = build_skill(skill)
    known = {k: v for k, v in phys.items() if k in spec.param_values()}
    if known:
        spec = spec.with_params(**known)
    if data_only:
        spec = spec.data_only()
    cfg = LBFGSConfig(max_iterations=iterations or it_default)
    model = train(spec, data, cfg=cfg, seed=seed, colloc_ratio=colloc_ratio)
    log.info("%s: data loss %.3e after %d iterations", skill, model.report.data_loss, model.report.iterations)
    return model


def train_all(directory, skills=SKILL_NAMES, seed=0, **kwargs):
    os.makedirs(directory, exist_ok=True)
    for skill in skills:
        train_default(skill, seed=seed, **kwargs).save(model_path(directory, skill))


def load_models(directory, skills=SKILL_NAMES):
    """Models keyed by skill; a missing file names the command that creates it."""
    models = {}
    for skill in skills:
        path = model_path(directory, skill)
        if not os.path.exists(path):
            raise ModelFilesError(
                f"missing model {path}; create it with `phyplan train --skill {skill} --out {path}` "
                f"or `phyplan train --skill all --out-dir {directory}`"
            )
        models[skill] = SkillModel.load(path)
    return models
