"""Linear-hardening material models at a single material point.

The state is ``y = p`` (kinematic hardening) or ``y = (p, xi)`` (isotropic
and combined hardening), where ``p`` is the plastic strain written as a
vector of ``p_dim`` components and ``xi`` the scalar hardening variable.
With a prescribed total strain ``eps(t)`` the stored energy

    1/2 C(eps - p).(eps - p) + 1/2 Hp p.p + 1/2 h_xi xi^2

leads to ``A = blockdiag(C + Hp, h_xi)`` and the load ``l = (C eps, 0)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .dissipation import ConeCapped, DissipationPotential, NormBall
from .energy import CoercivityScope, QuadraticEnergy
from .errors import ContractError, DimensionError
from .problem import LoadPath, Problem, Tolerances


class ModelKind(enum.Enum):
    KINEMATIC = "kinematic"
    ISOTROPIC = "isotropic"
    COMBINED = "combined"


def _as_matrix(x, n: int, name: str) -> np.ndarray:
    M = np.asarray(x, dtype=float)
    if M.ndim == 0:
        M = M * np.eye(n)
    elif M.ndim == 1:
        M = np.diag(M)
    if M.shape != (n, n):
        raise DimensionError(f"{name} must be {n}x{n}")
    return M


@dataclass(frozen=True, eq=False)
class MaterialModel:
    kind: ModelKind
    elastic_C: np.ndarray
    hardening_Hp: np.ndarray
    hardening_hxi: float
    sigma_y: float
    p_dim: int = 1

    def __post_init__(self):
        kind = ModelKind(self.kind)
        n = int(self.p_dim)
        if n < 1:
            raise ContractError("p_dim must be >= 1")
        C = _as_matrix(self.elastic_C, n, "elastic_C")
        Hp = _as_matrix(self.hardening_Hp, n, "hardening_Hp")
        hxi = float(self.hardening_hxi)
        if not self.sigma_y > 0:
            raise ContractError("sigma_y must be positive")
        for name, M in (("elastic_C", C), ("hardening_Hp", Hp)):
            if np.linalg.norm(M - M.T) > 1e-12 * max(1.0, np.linalg.norm(M)):
                raise ContractError(f"{name} must be symmetric")
        if np.linalg.eigvalsh(C)[0] <= 0:
            raise ContractError("elastic_C must be positive definite")
        hp_min = np.linalg.eigvalsh(Hp)[0]
        if kind is ModelKind.KINEMATIC:
            if hp_min <= 0:
                raise ContractError("kinematic hardening needs a positive definite Hp")
            if hxi != 0:
                raise ContractError("kinematic hardening has h_xi = 0")
        elif kind is ModelKind.ISOTROPIC:
            if np.any(Hp != 0):
                raise ContractError("isotropic hardening has Hp = 0")
            if hxi <= 0:
                raise ContractError("isotropic hardening needs h_xi > 0")
        else:
            if hp_min <= 0 or hxi <= 0:
                raise ContractError("combined hardening needs Hp positive definite and h_xi > 0")
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "elastic_C", C)
        object.__setattr__(self, "hardening_Hp", Hp)
        object.__setattr__(self, "hardening_hxi", hxi)
        object.__setattr__(self, "sigma_y", float(self.sigma_y))
        object.__setattr__(self, "p_dim", n)

    @property
    def has_xi(self) -> bool:
        return self.kind is not ModelKind.KINEMATIC

    @property
    def state_dim(self) -> int:
        return self.p_dim + (1 if self.has_xi else 0)

    def matrix(self) -> np.ndarray:
        K = self.elastic_C + self.hardening_Hp
        if not self.has_xi:
            return K.copy()
        A = np.zeros((self.p_dim + 1, self.p_dim + 1))
        A[: self.p_dim, : self.p_dim] = K
        A[-1, -1] = self.hardening_hxi
        return A

    def energy(self) -> QuadraticEnergy:
        # the elastic tensor keeps every model coercive on the whole space
        return QuadraticEnergy.from_matrix(self.matrix())

    def potential(self) -> DissipationPotential:
        if self.has_xi:
            return DissipationPotential(ConeCapped(self.sigma_y, self.p_dim))
        return DissipationPotential(NormBall(self.sigma_y, self.p_dim))

    def strain_load(self, strain: LoadPath) -> LoadPath:
        """Load ``(C eps(t), 0)`` generated by a total-strain history."""
        if strain.dim != self.p_dim:
            raise DimensionError("strain history must have p_dim components")
        vals = strain.values @ self.elastic_C.T
        if self.has_xi:
            vals = np.hstack([vals, np.zeros((vals.shape[0], 1))])
        return LoadPath(strain.times, vals)


def assemble(model: MaterialModel, load: LoadPath, y0=None,
             tolerances: Tolerances | None = None) -> Problem:
    """Abstract problem of a material model driven by the generalized load ``load``.

    ``load`` lives in the state space (use ``MaterialModel.strain_load`` to
    build it from a strain history).  ``y0`` defaults to the virgin state.
    """
    if y0 is None:
        y0 = np.zeros(model.state_dim)
    return Problem(model.energy(), model.potential(), load, y0,
                   tolerances or Tolerances())


def kinematic(C=1.0, Hp=1.0, sigma_y=1.0, p_dim: int = 1) -> MaterialModel:
    return MaterialModel(ModelKind.KINEMATIC, C, Hp, 0.0, sigma_y, p_dim)


def isotropic(C=1.0, h_xi=1.0, sigma_y=1.0, p_dim: int = 1) -> MaterialModel:
    return MaterialModel(ModelKind.ISOTROPIC, C, 0.0, h_xi, sigma_y, p_dim)


def combined(C=1.0, Hp=1.0, h_xi=1.0, sigma_y=1.0, p_dim: int = 1) -> MaterialModel:
    return MaterialModel(ModelKind.COMBINED, C, Hp, h_xi, sigma_y, p_dim)


def play_problem(a: float = 1.0, sigma: float = 1.0, load: LoadPath | None = None,
                 y0: float = 0.0, rate: float = 1.0, T: float = 2.0) -> Problem:
    """Scalar problem ``sigma d|y'| + a y = l(t)``; default load is ``rate * t``."""
    if load is None:
        load = LoadPath.ramp([1.0], rate, T)
    energy = QuadraticEnergy(np.array([[a]]), a, CoercivityScope.GLOBAL)
    return Problem(energy, DissipationPotential(NormBall(sigma, 1)), load, np.array([y0]))


def analytic_1d(a: float, sigma: float, ramp_rate: float, t):
    """Exact solution of ``sigma d|y'| + a y = ramp_rate * t`` with ``y(0) = 0``.

    Accepts scalar or array ``t``.
    """
    if not (a > 0 and sigma > 0):
        raise ContractError("a and sigma must be positive")
    if ramp_rate < 0:
        raise ContractError("ramp_rate must be nonnegative")
    t = np.asarray(t, dtype=float)
    out = np.maximum(0.0, (ramp_rate * t - sigma) / a)
    return float(out) if out.ndim == 0 else out


def yield_time(sigma: float, ramp_rate: float) -> float:
    """Time at which the ramp first reaches the elastic boundary."""
    return sigma / ramp_rate if ramp_rate > 0 else float("inf")
