"""Training datasets, collocation sets and their CSV form."""

import csv
from dataclasses import dataclass, field

import numpy as np


@dataclass
class Dataset:
    """Rows of (input vector, target vector) for one skill."""

    skill: str
    input_fields: tuple
    output_fields: tuple
    inputs: np.ndarray
    targets: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if self.inputs.shape != (len(self.inputs), len(self.input_fields)):
            raise ValueError(f"inputs must have {len(self.input_fields)} columns")
        if self.targets.shape != (len(self.inputs), len(self.output_fields)):
            raise ValueError(f"targets must be {len(self.inputs)} rows of {len(self.output_fields)} values")

    def __len__(self):
        return len(self.inputs)

    @classmethod
    def for_spec(cls, spec, inputs, targets, **provenance):
        return cls(spec.name, spec.input_fields, spec.output_fields, inputs, targets, dict(provenance))

    def check_spec(self, spec):
        if tuple(self.input_fields) != spec.input_fields or tuple(self.output_fields) != spec.output_fields:
            raise ValueError(
                f"dataset fields {self.input_fields + self.output_fields} do not match skill {spec.name}"
            )

    def subset(self, idx):
        return Dataset(self.skill, self.input_fields, self.output_fields,
                       self.inputs[idx], self.targets[idx], dict(self.provenance))

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            for key in sorted(self.provenance):
                fh.write(f"# {key}={self.provenance[key]}\n")
            writer = csv.writer(fh)
            writer.writerow(tuple(self.input_fields) + tuple(self.output_fields))
            for x, y in zip(self.inputs, self.targets):
                writer.writerow([repr(float(v)) for v in np.concatenate([x, y])])

    @classmethod
    def from_csv(cls, path, spec):
        """Read a file written by :meth:`to_csv`; columns are matched by name."""
        provenance = {}
        with open(path, newline="") as fh:
            lines = []
            for line in fh:
                if line.startswith("#"):
                    key, _, val = line[1:].strip().partition("=")
                    provenance[key.strip()] = val.strip()
                elif line.strip():
                    lines.append(line)
        rows = list(csv.reader(lines))
        if not rows:
            raise ValueError(f"{path}: empty dataset file")
        header = [h.strip() for h in rows[0]]
        missing = [f for f in spec.fields if f not in header]
        if missing:
            raise ValueError(f"{path}: missing columns {missing} for skill {spec.name}")
        cols = [header.index(f) for f in spec.fields]
        body = np.array([[float(r[c]) for c in cols] for r in rows[1:]], dtype=float)
        body = body.reshape(-1, len(cols))
        n_in = spec.n_inputs
        return cls(spec.name, spec.input_fields, spec.output_fields,
                   body[:, :n_in], body[:, n_in:], provenance)


@dataclass
class CollocationSet:
    """Input locations where only the physics residual is evaluated."""

    points: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __len__(self):
        return len(self.points)


def data_bounds(inputs):
    inputs = np.asarray(inputs, dtype=float)
    return inputs.min(axis=0), inputs.max(axis=0)


def sample_collocation(spec, data, ratio=4, seed=0, n=None):
    """Uniform collocation points over the dataset's input box.

    ``ratio * len(data)`` points are drawn unless ``n`` is given. For sliding
    the time coordinate is drawn below ``c * v_init`` where ``c`` is the
    largest t/v_init ratio present in the data, so points stay in the
    region the data covers (before the object stops).
    """
    if not spec.has_physics_loss:
        raise ValueError(f"{spec.name} has no physics loss")
    count = int(n if n is not None else ratio * len(data))
    if count < 1:
        raise ValueError("collocation set must be non-empty")
    lo, hi = data_bounds(data.inputs)
    rng = np.random.default_rng(seed)
    pts = lo + (hi - lo) * rng.random((count, spec.n_inputs))
    if spec.time_scale_field is not None:
        j = spec.input_fields.index(spec.time_scale_field)
        ti = spec.time_index
        scale = data.inputs[:, j]
        ok = scale > 0
        c = np.max(data.inputs[ok, ti] / scale[ok]) if ok.any() else hi[ti]
        t_cap = np.minimum(hi[ti], c * np.maximum(pts[:, j], 0.0))
        pts[:, ti] = lo[ti] + (t_cap - lo[ti]).clip(min=0.0) * rng.random(count)
    return CollocationSet(pts, lo, hi)
