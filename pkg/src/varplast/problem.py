"""Load paths, tolerances and the problem bundle ``(A, psi, l, y0, T)``."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dissipation import DissipationPotential
from .energy import QuadraticEnergy
from .errors import ContractError, DimensionError, UnstableInitialState


@dataclass(frozen=True, eq=False)
class LoadPath:
    """Piecewise-linear load ``l(t)`` through ``(time, value)`` knots.

    The first knot sits at ``t = 0`` and the last one at the horizon ``T``.
    """

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if t.size < 2:
            raise ContractError("a load path needs at least two knots")
        if v.shape[0] != t.size:
            raise DimensionError("one load value per knot is required")
        if t[0] != 0.0:
            raise ContractError("the first load knot must be at t = 0")
        if np.any(np.diff(t) <= 0):
            raise ContractError("load knot times must be strictly increasing")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise ContractError("load knots must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_knots(cls, knots) -> "LoadPath":
        times = [k[0] for k in knots]
        values = [np.atleast_1d(np.asarray(k[1], dtype=float)) for k in knots]
        return cls(np.array(times), np.array(values))

    @classmethod
    def ramp(cls, direction, rate: float, T: float) -> "LoadPath":
        """``l(t) = rate * t * direction`` on ``[0, T]``."""
        d = np.atleast_1d(np.asarray(direction, dtype=float))
        return cls(np.array([0.0, T]), np.array([0 * d, rate * T * d]))

    @classmethod
    def zero(cls, dim: int, T: float) -> "LoadPath":
        return cls(np.array([0.0, T]), np.zeros((2, dim)))

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def __call__(self, t: float) -> np.ndarray:
        t = float(t)
        ts = self.times
        if t < -1e-12 * (1.0 + self.T) or t > self.T * (1.0 + 1e-12) + 1e-300:
            raise ContractError(f"time {t} outside [0, {self.T}]")
        k = int(np.searchsorted(ts, t, side="right")) - 1
        k = min(max(k, 0), ts.size - 2)
        w = (t - ts[k]) / (ts[k + 1] - ts[k])
        w = min(max(w, 0.0), 1.0)
        if w == 0.0:
            return self.values[k].copy()
        if w == 1.0:
            return self.values[k + 1].copy()
        return (1.0 - w) * self.values[k] + w * self.values[k + 1]

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values, axis=0) / np.diff(self.times)[:, None]

    @property
    def lipschitz_bound(self) -> float:
        return float(np.max(np.linalg.norm(self.slopes, axis=1)))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.linalg.norm(self.values, axis=1)))

    def knots_between(self, a: float, b: float) -> np.ndarray:
        """Knot times strictly inside ``(a, b)``."""
        ts = self.times
        return ts[(ts > a) & (ts < b)]

    def reparametrized(self, new_times) -> "LoadPath":
        """Same knot values attached to different (increasing) times."""
        return LoadPath(np.asarray(new_times, dtype=float), self.values)

    def mapped(self, matrix) -> "LoadPath":
        """Knot values multiplied by ``matrix`` (``l -> matrix @ l``)."""
        M = np.atleast_2d(np.asarray(matrix, dtype=float))
        return LoadPath(self.times, self.values @ M.T)


@dataclass(frozen=True)
class Tolerances:
    tau_feas: float = 1e-9
    tau_kkt: float = 1e-10
    tau_func: float = 1e-9
    inner_tol: float = 1e-6

    def __post_init__(self):
        for name in ("tau_feas", "tau_kkt", "tau_func", "inner_tol"):
            if not getattr(self, name) > 0:
                raise ContractError(f"tolerance {name} must be positive")


@dataclass(frozen=True, eq=False)
class Problem:
    energy: QuadraticEnergy
    potential: DissipationPotential
    load: LoadPath
    y0: np.ndarray
    tolerances: Tolerances = field(default_factory=Tolerances)
    check_stability: bool = True

    def __post_init__(self):
        y0 = np.asarray(self.y0, dtype=float).reshape(-1).copy()
        n = self.energy.dim
        if self.potential.dim != n or self.load.dim != n or y0.shape[0] != n:
            raise DimensionError(
                f"dimensions disagree: energy {n}, potential {self.potential.dim}, "
                f"load {self.load.dim}, y0 {y0.shape[0]}")
        if not self.potential.in_domain(y0):
            raise ContractError("initial state is not in the domain cone")
        y0.setflags(write=False)
        object.__setattr__(self, "y0", y0)
        if self.check_stability:
            q0 = self.load(0.0) - self.energy.apply(y0)
            dist = self.potential.dist(q0)
            if dist > self.tolerances.tau_feas * (1.0 + float(np.linalg.norm(q0))):
                raise UnstableInitialState(
                    f"initial state is not stable: stress is {dist:.6g} away from the elastic domain",
                    dist)

    @property
    def dim(self) -> int:
        return self.energy.dim

    @property
    def T(self) -> float:
        return self.load.T

    @property
    def alpha(self) -> float:
        return self.energy.alpha

    @property
    def A(self) -> np.ndarray:
        return self.energy.matrix

    def stress(self, t: float, y) -> np.ndarray:
        return self.load(t) - self.energy.apply(y)

    def with_load(self, load: LoadPath) -> "Problem":
        return replace(self, load=load)

    def with_tolerances(self, tolerances: Tolerances) -> "Problem":
        return replace(self, tolerances=tolerances)
