"""Quadratic stored energy ``phi(y) = 1/2 <A y, y>`` and coercivity bookkeeping."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ContractError, DimensionError

SYM_TOL = 1e-12
PSD_TOL = 1e-10
ALPHA_SLACK = 1e-8


class CoercivityScope(enum.Enum):
    """Where ``<A y, y> >= alpha |y|^2`` is guaranteed to hold."""

    ON_C = "OnC"
    ON_C_MINUS_C = "OnCMinusC"
    GLOBAL = "Global"

    @property
    def supports_distance_bounds(self) -> bool:
        return self is not CoercivityScope.ON_C


@dataclass(frozen=True, eq=False)
class QuadraticEnergy:
    matrix: np.ndarray
    alpha: float
    scope: CoercivityScope = CoercivityScope.GLOBAL
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        A = np.atleast_2d(np.array(self.matrix, dtype=float))
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError("energy matrix must be square")
        norm = float(np.linalg.norm(A, 2))
        if np.linalg.norm(A - A.T, 2) > SYM_TOL * max(norm, 1.0):
            raise ContractError("energy matrix is not symmetric")
        A = 0.5 * (A + A.T)
        eig = np.linalg.eigvalsh(A)
        if eig[0] < -PSD_TOL * max(norm, 1.0):
            raise ContractError(f"energy matrix is not positive semidefinite (min eigenvalue {eig[0]:.3g})")
        if not self.alpha > 0:
            raise ContractError("alpha must be positive")
        scope = CoercivityScope(self.scope)
        if scope is CoercivityScope.GLOBAL and self.alpha > eig[0] + ALPHA_SLACK:
            raise ContractError(
                f"declared alpha {self.alpha:.6g} exceeds the smallest eigenvalue {eig[0]:.6g}")
        A.setflags(write=False)
        eig.setflags(write=False)
        object.__setattr__(self, "matrix", A)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "eigenvalues", eig)

    @classmethod
    def from_matrix(cls, matrix) -> "QuadraticEnergy":
        """Globally coercive energy with ``alpha`` the smallest eigenvalue."""
        A = np.atleast_2d(np.asarray(matrix, dtype=float))
        lam = float(np.linalg.eigvalsh(0.5 * (A + A.T))[0])
        if lam <= 0:
            raise ContractError("matrix is not positive definite; declare alpha and scope explicitly")
        return cls(A, lam, CoercivityScope.GLOBAL)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def _check(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.shape[0] != self.dim:
            raise DimensionError(f"state has dimension {y.shape[0]}, expected {self.dim}")
        return y

    def apply(self, y) -> np.ndarray:
        return self.matrix @ self._check(y)

    def phi(self, y) -> float:
        y = self._check(y)
        return 0.5 * float(self.apply(y) @ y)


def eval_phi(E: QuadraticEnergy, y) -> float:
    return E.phi(y)


def apply_A(E: QuadraticEnergy, y) -> np.ndarray:
    return E.apply(y)


def estimate_alpha(E: QuadraticEnergy, cone_sampler: Callable[[int], np.ndarray] | np.ndarray,
                   n_samples: int = 10_000) -> float:
    """Minimum sampled Rayleigh quotient ``2 phi(y) / |y|^2``.

    ``cone_sampler`` is either a callable returning an ``(n, dim)`` array or
    such an array directly.  Zero rows are ignored.
    """
    Y = cone_sampler(n_samples) if callable(cone_sampler) else np.asarray(cone_sampler, dtype=float)
    Y = np.atleast_2d(Y)
    if Y.size == 0:
        raise ContractError("empty sample set")
    if Y.shape[1] != E.dim:
        raise DimensionError("samples do not match the energy dimension")
    nrm2 = np.einsum("ij,ij->i", Y, Y)
    keep = nrm2 > 0
    if not np.any(keep):
        raise ContractError("all samples are zero")
    Y, nrm2 = Y[keep], nrm2[keep]
    quad = np.einsum("ij,jk,ik->i", Y, E.matrix, Y)
    return float(np.min(quad / nrm2))
