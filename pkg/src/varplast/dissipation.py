"""Positively 1-homogeneous dissipation potentials.

A dissipation potential ``psi`` is stored through its characteristic set
``C*`` (the elastic domain): ``psi`` is the support function of ``C*`` and
its conjugate ``psi*`` is the indicator of ``C*``.  Every set kind provides
a closed-form support function, a Euclidean projection and a test for the
domain cone ``C = {v : psi(v) < inf}``.

Infinite values are IEEE ``math.inf``; callers never subtract two
potentially infinite quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import ConvergenceError, DimensionError

#: relative band used to decide ``q in C*``
FEAS_REL = 1e-9
#: band used by the domain-cone test of cone-shaped domains
CONE_REL = 1e-12


def _vec(v, dim: int, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=float).reshape(-1)
    if arr.shape[0] != dim:
        raise DimensionError(f"{name} has dimension {arr.shape[0]}, expected {dim}")
    return arr


def feasibility_band(q: np.ndarray, rel: float = FEAS_REL) -> float:
    """Scale-aware tolerance for deciding ``q in C*``."""
    return rel * (1.0 + float(np.linalg.norm(q)))


class CharacteristicSet:
    """Closed convex set ``C*`` containing the origin."""

    dim: int

    def support(self, v: np.ndarray) -> float:
        raise NotImplementedError

    def in_domain(self, v: np.ndarray) -> bool:
        raise NotImplementedError

    def project(self, q: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def dist(self, q: np.ndarray) -> float:
        return float(np.linalg.norm(q - self.project(q)))

    def scale(self) -> float:
        """Characteristic size of the set (used to size random samples)."""
        return 1.0

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Points of ``C*``, a mix of interior and boundary points."""
        raw = rng.normal(scale=2.0 * self.scale(), size=(n, self.dim))
        return np.array([self.project(x) for x in raw])

    def sample_domain(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """Nonzero points of the domain cone ``C``."""
        out = []
        tries = 0
        while len(out) < n:
            v = rng.normal(size=self.dim)
            tries += 1
            if self.in_domain(v) and np.linalg.norm(v) > 0:
                out.append(v)
            if tries > 1000 * n:
                raise RuntimeError("domain cone too thin for rejection sampling")
        return np.array(out)


@dataclass(frozen=True)
class NormBall(CharacteristicSet):
    """``{q : |q| <= radius}``; ``psi(v) = radius * |v|``."""

    radius: float
    dim: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")

    def support(self, v):
        return self.radius * float(np.linalg.norm(v))

    def in_domain(self, v):
        return True

    def project(self, q):
        q = np.asarray(q, dtype=float)
        n = np.linalg.norm(q)
        if n <= self.radius:
            return q.copy()
        return q * (self.radius / n)

    def dist(self, q):
        return max(0.0, float(np.linalg.norm(q)) - self.radius)

    def scale(self):
        return self.radius

    def sample(self, rng, n):
        d = rng.normal(size=(n, self.dim))
        d /= np.linalg.norm(d, axis=1, keepdims=True)
        r = self.radius * rng.uniform(size=(n, 1)) ** (1.0 / self.dim)
        r[: n // 4] = self.radius
        return d * r

    def sample_domain(self, rng, n):
        return rng.normal(size=(n, self.dim))


@dataclass(frozen=True)
class ConeCapped(CharacteristicSet):
    """``{(q, g) : |q| + g <= radius}`` with ``q`` of size ``p_dim``.

    Dual to the domain cone ``{(p, xi) : |p| <= xi}``, on which
    ``psi(p, xi) = radius * xi``.  The last coordinate is the scalar block.
    """

    radius: float
    p_dim: int = 1
    dim: int = field(init=False)

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.p_dim < 1:
            raise ValueError("p_dim must be >= 1")
        object.__setattr__(self, "dim", self.p_dim + 1)

    def _cone_excess(self, v):
        return float(np.linalg.norm(v[:-1])) - float(v[-1])

    def in_domain(self, v):
        v = np.asarray(v, dtype=float)
        return self._cone_excess(v) <= CONE_REL * (1.0 + float(np.linalg.norm(v)))

    def support(self, v):
        v = np.asarray(v, dtype=float)
        if not self.in_domain(v):
            return math.inf
        # inside the band the value at the nearest point above the cone
        return self.radius * max(float(v[-1]), float(np.linalg.norm(v[:-1])))

    def project(self, q):
        q = np.asarray(q, dtype=float)
        x = q[:-1]
        s = self.radius - q[-1]
        nx = float(np.linalg.norm(x))
        if nx <= s:
            return q.copy()
        if nx <= -s:
            out = np.zeros_like(q)
            out[-1] = self.radius
            return out
        a = 0.5 * (nx + s)
        out = np.empty_like(q)
        out[:-1] = x * (a / nx)
        out[-1] = self.radius - a
        return out

    def dist(self, q):
        q = np.asarray(q, dtype=float)
        nx = float(np.linalg.norm(q[:-1]))
        s = self.radius - float(q[-1])
        if nx <= s:
            return 0.0
        if nx <= -s:
            return math.hypot(nx, s)
        return (nx - s) / math.sqrt(2.0)

    def scale(self):
        return self.radius

    def sample_domain(self, rng, n):
        p = rng.normal(size=(n, self.p_dim))
        xi = np.linalg.norm(p, axis=1) * (1.0 + rng.exponential(size=n))
        xi[: n // 4] = np.linalg.norm(p[: n // 4], axis=1)
        p[n // 4 : n // 4 + n // 10] = 0.0
        xi = np.where(xi > 0, xi, 1.0)
        return np.column_stack([p, xi])


@dataclass(frozen=True)
class Product(CharacteristicSet):
    """Cartesian product of sets acting on consecutive coordinate blocks."""

    parts: tuple
    dim: int = field(init=False)

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise ValueError("Product needs at least one part")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "dim", sum(p.dim for p in parts))

    @property
    def offsets(self) -> list[int]:
        out = [0]
        for p in self.parts:
            out.append(out[-1] + p.dim)
        return out

    def blocks(self, v):
        o = self.offsets
        return [v[o[k] : o[k + 1]] for k in range(len(self.parts))]

    def support(self, v):
        total = 0.0
        for part, vb in zip(self.parts, self.blocks(np.asarray(v, dtype=float))):
            val = part.support(vb)
            if math.isinf(val):
                return math.inf
            total += val
        return total

    def in_domain(self, v):
        return all(p.in_domain(vb) for p, vb in zip(self.parts, self.blocks(np.asarray(v, dtype=float))))

    def project(self, q):
        q = np.asarray(q, dtype=float)
        return np.concatenate([p.project(qb) for p, qb in zip(self.parts, self.blocks(q))])

    def scale(self):
        return max(p.scale() for p in self.parts)

    def sample(self, rng, n):
        return np.hstack([p.sample(rng, n) for p in self.parts])

    def sample_domain(self, rng, n):
        return np.hstack([p.sample_domain(rng, n) for p in self.parts])


@dataclass(frozen=True, eq=False)
class HalfspaceIntersection(CharacteristicSet):
    """``{q : normals @ q <= offsets}`` with nonnegative offsets."""

    normals: np.ndarray
    offsets: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        nrm = np.atleast_2d(np.asarray(self.normals, dtype=float))
        off = np.asarray(self.offsets, dtype=float).reshape(-1)
        if nrm.shape[0] != off.shape[0]:
            raise DimensionError("one offset per normal is required")
        if np.any(off < 0):
            raise ValueError("offsets must be >= 0 so that the set contains 0")
        nrm.setflags(write=False)
        off.setflags(write=False)
        object.__setattr__(self, "normals", nrm)
        object.__setattr__(self, "offsets", off)
        object.__setattr__(self, "dim", nrm.shape[1])

    def _lp(self, v):
        res = linprog(-np.asarray(v, dtype=float), A_ub=self.normals, b_ub=self.offsets,
                      bounds=[(None, None)] * self.dim, method="highs",
                      options={"primal_feasibility_tolerance": 1e-10,
                               "dual_feasibility_tolerance": 1e-10})
        return res

    def support(self, v):
        v = np.asarray(v, dtype=float)
        res = self._lp(v)
        if res.status == 3:
            return math.inf
        if res.status != 0:
            raise RuntimeError(f"support LP failed: {res.message}")
        value = max(0.0, -float(res.fun))
        # polish the LP vertex on its active constraints
        x = np.asarray(res.x, dtype=float)
        slack = self.offsets - self.normals @ x
        active = slack <= 1e-7 * (1.0 + np.abs(self.offsets))
        if np.any(active):
            x_pol, *_ = np.linalg.lstsq(self.normals[active], self.offsets[active], rcond=None)
            viol = float(np.max(self.normals @ x_pol - self.offsets))
            if viol <= 1e-13 * (1.0 + float(np.max(self.offsets))):
                value = max(0.0, float(v @ x_pol))
        return value

    def in_domain(self, v):
        return not math.isinf(self.support(v))

    def project(self, q):
        # least-distance programming via NNLS (Lawson & Hanson) on scaled data
        q = np.asarray(q, dtype=float)
        h = self.offsets - self.normals @ q
        if np.all(h >= 0):
            return q.copy()
        n = self.dim
        s = float(np.max(np.abs(h)))
        E = np.vstack([-self.normals.T, -h[None, :] / s])
        f = np.zeros(n + 1)
        f[-1] = 1.0
        u, _ = nnls(E, f, maxiter=50 * (n + h.size + 1))
        r = E @ u - f
        x = q - s * r[:n] / r[n]
        return self._polish(q, x)

    def _polish(self, q, x):
        """Exact projection onto the active face of ``x`` when its KKT conditions hold."""
        N, b = self.normals, self.offsets
        tol = 1e-7 * (1.0 + np.abs(b) + np.linalg.norm(N, axis=1) * np.linalg.norm(x))
        active = b - N @ x <= tol
        if not np.any(active):
            return x
        Na = N[active]
        lam, *_ = np.linalg.lstsq(Na @ Na.T, Na @ q - b[active], rcond=None)
        x_pol = q - Na.T @ lam
        band = 1e-13 * (1.0 + float(np.max(b)) + float(np.linalg.norm(x_pol)))
        if np.all(lam >= -band) and np.all(N @ x_pol - b <= band):
            return x_pol
        return x

    def scale(self):
        norms = np.linalg.norm(self.normals, axis=1)
        with np.errstate(divide="ignore"):
            ratios = np.where(norms > 0, self.offsets / np.where(norms > 0, norms, 1.0), 0.0)
        s = float(ratios.max()) if ratios.size else 1.0
        return s if s > 0 else 1.0


@dataclass(frozen=True, eq=False)
class Pullback(CharacteristicSet):
    """Characteristic set of ``v -> psi(basis @ v)``, namely ``basis.T @ C*``.

    Support values are exact through the parent set; projections are
    computed iteratively (accelerated projected gradient over the parent
    set) with a certified duality-gap stopping rule.
    """

    parent: CharacteristicSet
    basis: np.ndarray
    gap_tol: float = 1e-13
    max_iter: int = 50_000
    dim: int = field(init=False)

    def __post_init__(self):
        B = np.asarray(self.basis, dtype=float)
        if B.ndim != 2 or B.shape[0] != self.parent.dim:
            raise DimensionError("basis must have parent.dim rows")
        B.setflags(write=False)
        object.__setattr__(self, "basis", B)
        object.__setattr__(self, "dim", B.shape[1])

    def support(self, v):
        return self.parent.support(self.basis @ np.asarray(v, dtype=float))

    def in_domain(self, v):
        return self.parent.in_domain(self.basis @ np.asarray(v, dtype=float))

    def scale(self):
        return self.parent.scale()

    def _solve(self, q):
        B = self.basis
        q = np.asarray(q, dtype=float)
        c = self.parent.project(B @ q)
        z = c.copy()
        t = 1.0
        tol = self.gap_tol * (1.0 + float(np.linalg.norm(q)))
        upper = lower = 0.0
        for k in range(self.max_iter):
            w = q - B.T @ c
            upper = float(np.linalg.norm(w))
            if upper <= tol:
                return c, upper
            sup = self.parent.support(B @ w)
            lower = -math.inf if math.isinf(sup) else (float(w @ q) - sup) / upper
            if upper - lower <= tol:
                return c, upper
            c_new = self.parent.project(z + B @ (q - B.T @ z))
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            # gradient restart keeps the iteration monotone
            if float((z - c_new) @ (c_new - c)) > 0:
                t_new = 1.0
                z = c_new
            else:
                z = c_new + ((t - 1.0) / t_new) * (c_new - c)
            c, t = c_new, t_new
        raise ConvergenceError("pullback projection did not converge", upper - lower, self.max_iter)

    def project(self, q):
        c, _ = self._solve(q)
        return self.basis.T @ c

    def dist(self, q):
        _, upper = self._solve(q)
        return upper


@dataclass(frozen=True)
class DissipationPotential:
    """``psi`` as the support function of ``cstar``."""

    cstar: CharacteristicSet

    @property
    def dim(self) -> int:
        return self.cstar.dim

    def psi(self, v) -> float:
        return self.cstar.support(_vec(v, self.dim))

    def in_domain(self, v) -> bool:
        return self.cstar.in_domain(_vec(v, self.dim))

    def dist(self, q) -> float:
        return self.cstar.dist(_vec(q, self.dim))

    def project(self, q) -> np.ndarray:
        return self.cstar.project(_vec(q, self.dim))

    def is_feasible(self, q, rel: float = FEAS_REL) -> bool:
        """``q in C*`` up to the scale-aware band."""
        q = _vec(q, self.dim)
        return self.cstar.dist(q) <= feasibility_band(q, rel)

    def conjugate(self, q, rel: float = FEAS_REL) -> float:
        """``psi*(q)``: 0 on ``C*`` (within the band), ``inf`` elsewhere."""
        return 0.0 if self.is_feasible(q, rel) else math.inf


def eval_psi(pot: DissipationPotential, v) -> float:
    return pot.psi(v)


def dist_to_cstar(pot: DissipationPotential, q) -> float:
    return pot.dist(q)


def project_cstar(pot: DissipationPotential, q) -> np.ndarray:
    return pot.project(q)


def kinematic_potential(sigma_y: float, p_dim: int = 1) -> DissipationPotential:
    return DissipationPotential(NormBall(sigma_y, p_dim))


def isotropic_potential(sigma_y: float, p_dim: int = 1) -> DissipationPotential:
    return DissipationPotential(ConeCapped(sigma_y, p_dim))


@dataclass
class ConjugacyReport:
    checks: int = 0
    fenchel_checks: int = 0
    fenchel_violations: int = 0
    equality_checks: int = 0
    equality_violations: int = 0
    domain_mismatches: int = 0
    worst_equality_error: float = 0.0

    @property
    def violations(self) -> int:
        return self.fenchel_violations + self.equality_violations + self.domain_mismatches

    @property
    def passed(self) -> bool:
        return self.violations == 0


def verify_conjugacy(pot: DissipationPotential, sample_count: int, seed: int = 0,
                     rtol: float = 1e-6) -> ConjugacyReport:
    """Randomized check of Fenchel's inequality and of its equality case.

    For ``q in C*`` and ``v`` in the domain, ``psi(v) >= <q, v>`` must hold.
    The equality case is exercised with the maximizer of ``<., v>`` over
    ``C*`` obtained from the projection of ``lam * v`` for a large ``lam``,
    a route independent of the closed-form support function.  For ``v``
    outside the domain that projection must grow without bound.
    """
    if sample_count <= 0:
        raise ValueError("sample_count must be positive")
    rng = np.random.default_rng(seed)
    cs = pot.cstar
    scale = cs.scale()
    n_dom = sample_count // 2
    vs = np.vstack([cs.sample_domain(rng, n_dom),
                    rng.normal(size=(sample_count - n_dom, cs.dim))])
    n_in = sample_count // 2
    qs = np.vstack([cs.sample(rng, n_in),
                    rng.normal(scale=2.0 * scale, size=(sample_count - n_in, cs.dim))])
    report = ConjugacyReport()
    for v, q in zip(vs, qs):
        report.checks += 1
        nv = float(np.linalg.norm(v))
        if nv == 0.0:
            continue
        psi_v = pot.psi(v)
        if pot.is_feasible(q) and not math.isinf(psi_v):
            report.fenchel_checks += 1
            slack = feasibility_band(q) * nv + 1e-12 * (1.0 + abs(psi_v))
            if psi_v + slack < float(q @ v):
                report.fenchel_violations += 1
        lam = 1e6 * (1.0 + scale) / nv
        s1 = float(pot.project(lam * v) @ v)
        s2 = float(pot.project(10.0 * lam * v) @ v)
        if math.isinf(psi_v):
            if not s2 > s1 + 0.5 * scale * nv:
                report.domain_mismatches += 1
        else:
            report.equality_checks += 1
            err = abs(s1 - psi_v)
            report.worst_equality_error = max(report.worst_equality_error, err / (1.0 + abs(psi_v)))
            if err > rtol * (1.0 + abs(psi_v)) or abs(s2 - s1) > rtol * (1.0 + abs(psi_v)):
                report.equality_violations += 1
    return report


def as_product(parts: Sequence[CharacteristicSet]) -> DissipationPotential:
    return DissipationPotential(Product(tuple(parts)))
