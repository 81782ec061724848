"""Restriction to subspaces and nested-subspace convergence experiments."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dissipation import ConeCapped, DissipationPotential, NormBall, Pullback
from .energy import CoercivityScope, QuadraticEnergy, estimate_alpha
from .errors import ContractError, DimensionError
from .problem import LoadPath, Problem
from .solver import solve_theta
from .trajectory import Partition, Trajectory, uniform_distance

ORTHO_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Subspace:
    """Span of the orthonormal columns of ``basis``."""

    basis: np.ndarray

    def __post_init__(self):
        B = np.array(self.basis, dtype=float)
        if B.ndim == 1:
            B = B[:, None]
        n, k = B.shape
        if k < 1 or k > n:
            raise DimensionError("a subspace basis needs 1 <= k <= N columns")
        if np.max(np.abs(B.T @ B - np.eye(k))) > ORTHO_TOL:
            raise ContractError("subspace basis is not orthonormal")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(np.eye(n))

    @classmethod
    def coordinates(cls, n: int, indices: Sequence[int]) -> "Subspace":
        return cls(np.eye(n)[:, list(indices)])

    @property
    def parent_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @property
    def is_identity(self) -> bool:
        return self.dim == self.parent_dim and np.array_equal(self.basis, np.eye(self.dim))

    def contains(self, other: "Subspace", tol: float = 1e-10) -> bool:
        B = self.basis
        R = other.basis - B @ (B.T @ other.basis)
        return float(np.max(np.abs(R), initial=0.0)) <= tol

    def lift(self, v) -> np.ndarray:
        return self.basis @ np.asarray(v, dtype=float)

    def coords(self, y) -> np.ndarray:
        return self.basis.T @ np.asarray(y, dtype=float)


def random_chain(n: int, dims: Sequence[int], seed: int = 0) -> list[Subspace]:
    """Nested subspaces spanned by leading columns of a random orthogonal matrix."""
    rng = np.random.default_rng(seed)
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    Q = Q * np.sign(np.diag(R))
    return [Subspace(Q[:, :k]) for k in dims]


def coordinate_chain(n: int) -> list[Subspace]:
    return [Subspace.coordinates(n, range(k)) for k in range(1, n + 1)]


def cone_chain(p_dim: int, seed: int = 0) -> list[Subspace]:
    """Nested subspaces of the ``(p, xi)`` space that always contain ``xi``.

    The ``p`` block is spanned by leading columns of a random orthogonal matrix.
    """
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(p_dim, p_dim)))
    out = []
    for k in range(1, p_dim + 1):
        B = np.zeros((p_dim + 1, k + 1))
        B[:p_dim, :k] = Q[:, :k]
        B[-1, -1] = 1.0
        out.append(Subspace(B))
    return out


def _restrict_potential(pot: DissipationPotential, B: np.ndarray) -> DissipationPotential:
    cs = pot.cstar
    n, k = B.shape
    if isinstance(cs, NormBall):
        # |B v| = |v| for orthonormal columns
        return DissipationPotential(NormBall(cs.radius, k))
    if isinstance(cs, ConeCapped) and k >= 2:
        e_last = np.zeros(n)
        e_last[-1] = 1.0
        if np.array_equal(B[:, -1], e_last) and not np.any(B[-1, :-1]):
            return DissipationPotential(ConeCapped(cs.radius, k - 1))
    return DissipationPotential(Pullback(cs, B))


def _restrict_energy(E: QuadraticEnergy, B: np.ndarray, pot_h: DissipationPotential,
                     seed: int = 0) -> QuadraticEnergy:
    Ah = B.T @ E.matrix @ B
    Ah = 0.5 * (Ah + Ah.T)
    lam = float(np.linalg.eigvalsh(Ah)[0])
    if lam > 0:
        return QuadraticEnergy(Ah, lam, CoercivityScope.GLOBAL)
    # coercivity is lost on the whole subspace: re-estimate on the restricted cone
    rng = np.random.default_rng(seed)
    alpha_h = estimate_alpha(QuadraticEnergy(Ah, 1.0, CoercivityScope.ON_C),
                             pot_h.cstar.sample_domain(rng, 10_000))
    if alpha_h <= 0:
        raise ContractError("restricted energy is not coercive on the restricted cone")
    return QuadraticEnergy(Ah, alpha_h, CoercivityScope.ON_C)


def restrict(problem: Problem, space: Subspace, psi_mode: str = "restrict",
             custom: DissipationPotential | None = None) -> Problem:
    """Problem posed in the coordinates of ``space``.

    ``psi_mode="restrict"`` uses ``psi_h(v) = psi(B v)``; ``"custom"`` uses the
    given potential on the subspace coordinates.
    """
    if space.parent_dim != problem.dim:
        raise DimensionError("subspace lives in a different state space")
    if psi_mode not in ("restrict", "custom"):
        raise ContractError(f"unknown psi_mode {psi_mode!r}")
    if psi_mode == "restrict" and space.is_identity:
        return problem
    B = space.basis
    if psi_mode == "custom":
        if custom is None or custom.dim != space.dim:
            raise ContractError("custom mode needs a potential on the subspace coordinates")
        pot_h = custom
    else:
        pot_h = _restrict_potential(problem.potential, B)
    energy_h = _restrict_energy(problem.energy, B, pot_h)
    return Problem(energy_h, pot_h, problem.load.mapped(B.T), B.T @ problem.y0,
                   problem.tolerances)


def check_nested(chain: Sequence[Subspace], full_dim: int) -> None:
    if not chain:
        raise ContractError("empty subspace chain")
    for a, b in zip(chain[:-1], chain[1:]):
        if not (a.dim < b.dim and b.contains(a)):
            raise ContractError("subspace chain is not strictly nested")
    if chain[-1].dim != full_dim:
        raise ContractError("the last subspace must be the whole space")


@dataclass
class NestedReport:
    dims: list
    distances: list
    functionals: list
    reference: Trajectory = field(repr=False)

    @property
    def final_distance(self) -> float:
        return self.distances[-1]

    def to_dict(self) -> dict:
        return {"dims": self.dims, "distances": self.distances, "functionals": self.functionals}


def nested_convergence(problem: Problem, chain: Sequence[Subspace], part: Partition,
                       theta: float) -> NestedReport:
    """Solve on every subspace of the chain and measure the lifted distance."""
    from .functional import eval_Fn_theta

    check_nested(chain, problem.dim)
    ref = solve_theta(problem, part, theta)
    dims, dists, funcs = [], [], []
    for S in chain:
        Ph = restrict(problem, S)
        tr = solve_theta(Ph, part, theta)
        dims.append(S.dim)
        dists.append(uniform_distance(tr.lifted(S.basis), ref))
        funcs.append(eval_Fn_theta(Ph, tr.states, part, theta).total)
    return NestedReport(dims, dists, funcs, ref)


@dataclass
class SpaceTimeTable:
    dims: list
    steps: list
    table: np.ndarray
    reference_scale: float

    @property
    def diagonal(self) -> list:
        n = min(len(self.dims), len(self.steps))
        return [float(self.table[j, j]) for j in range(n)]

    @property
    def relative_diagonal(self) -> list:
        return [d / self.reference_scale for d in self.diagonal]

    def rows(self):
        for j, k in enumerate(self.dims):
            for m, n in enumerate(self.steps):
                yield k, n, float(self.table[j, m])


def space_time_table(problem: Problem, chain: Sequence[Subspace], steps: Sequence[int],
                     theta: float, reference_steps: int) -> SpaceTimeTable:
    """Uniform distances of every (subspace, step count) solve to a fine full solve."""
    check_nested(chain, problem.dim)
    if reference_steps < max(steps):
        raise ContractError("the reference run must be at least as fine as the table")
    ref = solve_theta(problem, Partition.uniform(problem.T, reference_steps), theta)
    scale = float(np.max(np.linalg.norm(ref.states, axis=1)))
    table = np.empty((len(chain), len(steps)))
    for j, S in enumerate(chain):
        Ph = restrict(problem, S)
        for m, n in enumerate(steps):
            tr = solve_theta(Ph, Partition.uniform(problem.T, n), theta)
            table[j, m] = uniform_distance(tr.lifted(S.basis), ref)
    return SpaceTimeTable([S.dim for S in chain], list(steps), table,
                          scale if scale > 0 else 1.0)


def synthetic_problem(dim: int = 4, seed: int = 0, sigma: float = 1.0, T: float = 1.0,
                      knots: int = 6, amplitude: float = 3.0,
                      eig_range: tuple = (1.0, 5.0)) -> Problem:
    """Random SPD energy, norm-ball dissipation and a piecewise-linear load from rest."""
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.normal(size=(dim, dim)))
    eig = rng.uniform(*eig_range, size=dim)
    A = (Q * eig) @ Q.T
    A = 0.5 * (A + A.T)
    times = np.linspace(0.0, T, knots + 1)
    values = rng.normal(scale=amplitude, size=(knots + 1, dim))
    values[0] = 0.0
    return Problem(QuadraticEnergy.from_matrix(A), DissipationPotential(NormBall(sigma, dim)),
                   LoadPath(times, values), np.zeros(dim))


def jitter_load(problem: Problem, eps: float, seed: int = 0) -> Problem:
    """Problem with the load knots moved by at most ``eps`` (the value at ``t = 0`` kept)."""
    rng = np.random.default_rng(seed)
    noise = rng.uniform(-1.0, 1.0, size=problem.load.values.shape)
    noise /= max(1.0, float(np.max(np.linalg.norm(noise, axis=1))))
    noise[0] = 0.0
    load = LoadPath(problem.load.times, problem.load.values + eps * noise)
    return problem.with_load(load)
