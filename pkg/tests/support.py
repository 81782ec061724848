"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np

from varplast.materials import assemble, combined, isotropic, kinematic
from varplast.problem import LoadPath

ANISO_C = np.array([[2.0, 0.3], [0.3, 1.0]])

MODELS = {
    "kinematic": kinematic(C=ANISO_C, Hp=0.5, sigma_y=1.0, p_dim=2),
    "isotropic": isotropic(C=ANISO_C, h_xi=0.7, sigma_y=1.0, p_dim=2),
    "combined": combined(C=ANISO_C, Hp=0.5, h_xi=0.7, sigma_y=1.0, p_dim=2),
}

THETAS = (0.5, 0.75, 1.0)


def random_load(rng: np.random.Generator, dim: int, T: float = 1.0, knots: int = 6,
                amplitude: float = 3.0, scalar_block_zero: bool = False) -> LoadPath:
    """Piecewise-linear load from ``l(0) = 0`` with uniformly spaced knots."""
    times = np.linspace(0.0, T, knots + 1)
    values = rng.normal(scale=amplitude, size=(knots + 1, dim))
    values[0] = 0.0
    if scalar_block_zero:
        values[:, -1] = 0.0
    return LoadPath(times, values)


def model_problem(name: str, seed: int, T: float = 1.0):
    model = MODELS[name]
    rng = np.random.default_rng(seed)
    load = random_load(rng, model.state_dim, T, scalar_block_zero=model.has_xi)
    return assemble(model, load)


def brute_force_min(objective, grid):
    """Grid point with the smallest objective value."""
    vals = objective(grid)
    k = int(np.argmin(vals))
    return grid[k], vals[k]
