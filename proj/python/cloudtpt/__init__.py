"""Transition path theory on point clouds.

The numerics live in the compiled ``_core`` module; this package re-exports it
and adds small conveniences for reading run directories.
"""

import csv
import json
from pathlib import Path

import numpy as np

from ._core import (
    Error,
    analyze,
    ball_indices,
    hausdorff_distance,
    inverse_stereographic,
    mueller,
    mueller_stationary_points,
    reparameterize,
    run_experiment,
    sample_sphere,
    sample_torus,
    sphere_mueller_energies,
    tessellate,
)

__all__ = [
    "Error",
    "analyze",
    "ball_indices",
    "hausdorff_distance",
    "inverse_stereographic",
    "mueller",
    "mueller_stationary_points",
    "reparameterize",
    "run_experiment",
    "sample_sphere",
    "sample_torus",
    "sphere_mueller_energies",
    "tessellate",
    "load_summary",
    "load_csv",
]


def load_summary(run_dir):
    """Parsed summary.json of a run directory."""
    return json.loads((Path(run_dir) / "summary.json").read_text())


def load_csv(path):
    """Header and float rows of one of the run's CSV files."""
    with open(path, newline="") as f:
        rows = list(csv.reader(f))
    return rows[0], np.array([[float(x) for x in r] for r in rows[1:]])
