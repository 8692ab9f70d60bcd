"""Conformal prediction sets for responses in metric spaces."""

import json

import numpy as np

from . import _core
from ._core import Dataset, Model, ObjconfError, fit, generate

__all__ = [
    "Dataset",
    "Model",
    "ObjconfError",
    "candidate_grid",
    "cli",
    "dataset",
    "distance",
    "evaluate",
    "fit",
    "generate",
    "simulate",
    "single_index_fit",
    "space",
]


def space(kind, **params):
    """Space descriptor, e.g. space("euclidean", k=2) or space("sphere2")."""
    return {"kind": kind, **params}


def _descriptor(s):
    return s if isinstance(s, str) else json.dumps(s)


def dataset(space, x, y):
    y = np.asarray(y, dtype=float)
    if y.ndim == 1:
        y = y[:, None]
    return Dataset.from_arrays(_descriptor(space), np.asarray(x, dtype=float), y)


def distance(space, a, b):
    return _core.distance(_descriptor(space), np.atleast_1d(np.asarray(a, dtype=float)),
                          np.atleast_1d(np.asarray(b, dtype=float)))


def candidate_grid(space, resolution, bounds=()):
    return _core.candidate_grid(_descriptor(space), resolution, list(bounds))


def evaluate(model, test, bins=20):
    return json.loads(model.evaluate(test, bins))


def simulate(setting, n, runs, seed=0, alpha=0.1, n_test=2000):
    return json.loads(_core.simulate(str(setting), n, runs, seed, alpha, n_test))


def single_index_fit(data, alpha=0.1, seed=0, bins=0, restarts=8):
    model, theta = _core.single_index_fit(data, alpha, seed, bins, restarts)
    return model, json.loads(theta)


def cli(*args):
    """Runs a CLI subcommand in-process; returns (exit_code, stdout, stderr)."""
    return _core.cli([str(a) for a in args])
