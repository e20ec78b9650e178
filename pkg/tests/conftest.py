"""Shared fixtures: trained skill models cached across pytest runs.

Training the full model zoo takes a few minutes, so the files are stored in
pytest's cache directory under a key derived from the training settings;
changing those settings retrains automatically.
"""

import hashlib
import json

import pytest

from phyplan.bench.zoo import TRAINING_DEFAULTS, load_models, model_path, train_default
from phyplan.skills import SKILL_NAMES, SkillModel
from phyplan.worldsim.oracle import DEFAULT_BOUNDS, DEFAULT_PARAMS

BIASED_MU = 0.3
ACCEPTANCE = pytest.StashKey[list]()


def _settings_key():
    blob = json.dumps([TRAINING_DEFAULTS, DEFAULT_BOUNDS, DEFAULT_PARAMS, BIASED_MU], sort_keys=True)
    return hashlib.sha1(blob.encode()).hexdigest()[:12]


def pytest_collection_modifyitems(items):
    # anything that needs the trained zoo may have to train it first
    for item in items:
        if {"model_dir", "trained_models", "biased_sliding"} & set(getattr(item, "fixturenames", ())):
            item.add_marker(pytest.mark.slow)


@pytest.fixture(scope="session")
def model_dir(request):
    directory = request.config.cache.mkdir(f"phyplan-models-{_settings_key()}")
    for skill in SKILL_NAMES:
        path = model_path(str(directory), skill)
        if not directory.joinpath(f"{skill}.bin").exists():
            train_default(skill).save(path)
    return str(directory)


@pytest.fixture(scope="session")
def trained_models(model_dir):
    return load_models(model_dir)


@pytest.fixture(scope="session")
def biased_sliding(model_dir):
    """Sliding model trained under a wrong friction coefficient."""
    path = model_path(model_dir, f"sliding-mu{BIASED_MU}")
    try:
        return SkillModel.load(path)
    except FileNotFoundError:
        model = train_default("sliding", params={"mu": BIASED_MU})
        model.save(path)
        return model


@pytest.fixture
def acceptance(request):
    """``report(number, title, ok, detail)``: record a PASS/FAIL line, then assert."""
    lines = request.config.stash.setdefault(ACCEPTANCE, [])

    def report(number, title, ok, detail=""):
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}: {title} [{detail}]"
        lines.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
