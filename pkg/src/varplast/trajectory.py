"""Time partitions and discrete trajectories with their interpolants."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .errors import ContractError, DimensionError


@dataclass(frozen=True, eq=False)
class Partition:
    """Nodes ``0 = t^0 < t^1 < ... < t^N = T``."""

    times: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).reshape(-1)
        if t.size < 2:
            raise ContractError("a partition needs at least one step")
        if t[0] != 0.0:
            raise ContractError("a partition starts at t = 0")
        if np.any(np.diff(t) <= 0) or not np.all(np.isfinite(t)):
            raise ContractError("partition times must be finite and strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)

    @classmethod
    def uniform(cls, T: float, N: int) -> "Partition":
        if int(N) < 1:
            raise ContractError("a partition needs at least one step")
        t = np.linspace(0.0, T, int(N) + 1)
        t[-1] = T
        return cls(t)

    @classmethod
    def from_steps(cls, steps: Iterable[float]) -> "Partition":
        s = np.asarray(list(steps), dtype=float)
        if s.size == 0:
            raise ContractError("a partition needs at least one step")
        if np.any(s <= 0):
            raise ContractError("steps must be positive")
        return cls(np.concatenate([[0.0], np.cumsum(s)]))

    @property
    def N(self) -> int:
        return self.times.size - 1

    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.times)

    @property
    def diameter(self) -> float:
        return float(np.max(self.steps))

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        s = self.steps
        return bool(np.max(s) - np.min(s) <= rtol * np.max(s))

    def theta_times(self, theta: float) -> np.ndarray:
        t = self.times
        return theta * t[1:] + (1.0 - theta) * t[:-1]

    def bisect(self, intervals: Iterable[int]) -> "Partition":
        """Partition with the given (1-based) intervals split at their midpoints."""
        idx = sorted({int(i) for i in intervals})
        for i in idx:
            if not 1 <= i <= self.N:
                raise ContractError(f"interval index {i} out of range")
        t = self.times
        mids = [0.5 * (t[i - 1] + t[i]) for i in idx]
        return Partition(np.sort(np.concatenate([t, mids])))

    def interval_of(self, t: float) -> int:
        """1-based index ``i`` with ``t in (t^{i-1}, t^i]`` (``1`` for ``t = 0``)."""
        i = int(np.searchsorted(self.times, t, side="left"))
        return min(max(i, 1), self.N)


@dataclass(frozen=True)
class StepDiagnostics:
    iterations: int
    residual: float
    dissipation: float
    method: str
    stress_distance: float = 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    partition: Partition
    states: np.ndarray
    diagnostics: tuple = field(default_factory=tuple)

    def __post_init__(self):
        Y = np.array(self.states, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.shape[0] != self.partition.N + 1:
            raise DimensionError(
                f"{Y.shape[0]} states for a partition with {self.partition.N + 1} nodes")
        Y.setflags(write=False)
        object.__setattr__(self, "states", Y)
        object.__setattr__(self, "diagnostics", tuple(self.diagnostics))

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.partition.times

    @property
    def increments(self) -> np.ndarray:
        """``e^i = y^i - y^{i-1}`` for ``i = 1..N``."""
        return np.diff(self.states, axis=0)

    @property
    def slopes(self) -> np.ndarray:
        """``delta y^i = e^i / tau^i``."""
        return self.increments / self.partition.steps[:, None]

    def theta_states(self, theta: float) -> np.ndarray:
        Y = self.states
        return theta * Y[1:] + (1.0 - theta) * Y[:-1]

    def hat(self, t) -> np.ndarray:
        """Piecewise-linear interpolant; ``t`` scalar or 1-D array."""
        t_arr = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.column_stack([np.interp(t_arr, self.times, self.states[:, k])
                               for k in range(self.dim)])
        return out[0] if np.ndim(t) == 0 else out

    def bar(self, t: float) -> np.ndarray:
        """Backward-constant interpolant: ``y^i`` on ``(t^{i-1}, t^i]``."""
        if t <= 0.0:
            return self.states[0].copy()
        return self.states[self.partition.interval_of(t)].copy()

    def lifted(self, basis) -> "Trajectory":
        """Trajectory mapped through ``y -> basis @ y``."""
        B = np.asarray(basis, dtype=float)
        return Trajectory(self.partition, self.states @ B.T, self.diagnostics)

    def with_states(self, states) -> "Trajectory":
        return Trajectory(self.partition, states)


def uniform_distance(a: Trajectory, b: Trajectory) -> float:
    """``max_t |a_hat(t) - b_hat(t)|`` for piecewise-linear trajectories.

    The difference is piecewise linear on the union of both node sets, so the
    maximum is attained at one of those nodes.
    """
    if abs(a.partition.T - b.partition.T) > 1e-12 * max(1.0, a.partition.T):
        raise ContractError("trajectories live on different horizons")
    t = np.union1d(a.times, b.times)
    t = t[t <= min(a.partition.T, b.partition.T)]
    return float(np.max(np.linalg.norm(a.hat(t) - b.hat(t), axis=1)))


def nodal_distance(a: Trajectory, b: Trajectory) -> float:
    """``max_i |a^i - b^i|`` on a shared partition."""
    if a.partition.N != b.partition.N or not np.array_equal(a.times, b.times):
        raise ContractError("trajectories are not on the same partition")
    return float(np.max(np.linalg.norm(a.states - b.states, axis=1)))
