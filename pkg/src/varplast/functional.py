"""The Lagrangian, the path functionals and energy bookkeeping.

For a piecewise-linear trajectory the Lagrangian

    L(t, y, p) = psi(p) + psi*(l(t) - A y) - <l(t) - A y, p>

is nonnegative and vanishes exactly on solutions.  Its conjugate term is
{0, inf}-valued; the finite part is evaluated with the stress projected
onto ``C*``, which keeps every reported value nonnegative by Fenchel's
inequality even when the stress sits inside the feasibility band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dissipation import feasibility_band
from .errors import ContractError, DimensionError
from .problem import Problem
from .trajectory import Partition, Trajectory


@dataclass(frozen=True)
class Quadrature:
    """How the continuous functional treats each interval.

    ``theta``: the whole Lagrangian at the theta-point, one-point rule (this
    reproduces the discrete functional term by term).
    ``exact``: exact integration of the finite part for piecewise-linear data,
    with the feasibility of the stress checked at the interval ends and at
    interior load knots, which suffices because the stress is then piecewise
    linear in time.
    ``sampled``: finite part as in ``exact``, feasibility checked at ``k``
    interior points as well; a diagnostic mode.
    """

    kind: str = "theta"
    k: int = 0

    def __post_init__(self):
        if self.kind not in ("theta", "exact", "sampled"):
            raise ContractError(f"unknown quadrature {self.kind!r}")
        if self.kind == "sampled" and self.k < 1:
            raise ContractError("sampled quadrature needs k >= 1")


THETA_POINT = Quadrature("theta")
EXACT = Quadrature("exact")


def sampled(k: int) -> Quadrature:
    return Quadrature("sampled", k)


@dataclass
class FunctionalReport:
    total: float
    per_interval: np.ndarray
    initial_penalty: float
    dissipation_total: float
    feasibility_violations: list = field(default_factory=list)
    domain_violations: list = field(default_factory=list)

    @property
    def finite_total(self) -> float:
        """Sum of the finite parts (``total`` when feasible)."""
        vals = self.per_interval[np.isfinite(self.per_interval)]
        return float(np.sum(vals)) + self.initial_penalty

    @property
    def feasible(self) -> bool:
        return not self.feasibility_violations and not self.domain_violations

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "initial_penalty": self.initial_penalty,
            "dissipation_total": self.dissipation_total,
            "per_interval": [float(x) for x in self.per_interval],
            "feasibility_violations": [[int(i), float(d)] for i, d in self.feasibility_violations],
            "domain_violations": [int(i) for i in self.domain_violations],
        }


def initial_penalty(problem: Problem, y_start) -> float:
    """``chi(y(0) - y0) = phi(y(0) - y0) + |y(0) - y0|^2``."""
    dy = np.asarray(y_start, dtype=float) - problem.y0
    return problem.energy.phi(dy) + float(dy @ dy)


def _check_state(problem: Problem, v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size != problem.dim:
        raise DimensionError(f"vector has dimension {v.size}, expected {problem.dim}")
    return v


def _finite_part(problem: Problem, q: np.ndarray, p: np.ndarray):
    """``(psi(p) - <Pi q, p>, dist(q, C*), psi(p))``."""
    pot = problem.potential
    pq = pot.project(q)
    dist = float(np.linalg.norm(q - pq))
    psi_p = pot.psi(p)
    if math.isinf(psi_p):
        return math.inf, dist, psi_p
    return psi_p - float(pq @ p), dist, psi_p


def _infeasible(problem: Problem, q: np.ndarray, dist: float) -> bool:
    return dist > feasibility_band(q, problem.tolerances.tau_feas)


def lagrangian(problem: Problem, t: float, y, p) -> float:
    y = _check_state(problem, y)
    p = _check_state(problem, p)
    q = problem.stress(t, y)
    val, dist, _ = _finite_part(problem, q, p)
    if _infeasible(problem, q, dist):
        return math.inf
    return val


def _assemble(per, init, diss, viol, dom) -> FunctionalReport:
    per = np.asarray(per, dtype=float)
    if viol or dom:
        total = math.inf
    else:
        total = float(np.sum(per)) + init
    return FunctionalReport(total, per, init, diss, viol, dom)


def eval_Fn_theta(problem: Problem, states, part: Partition, theta: float) -> FunctionalReport:
    """Discrete functional in its step-free form."""
    Y = np.asarray(states, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != part.N + 1:
        raise ContractError(f"{Y.shape[0]} states for {part.N + 1} partition nodes")
    if Y.shape[1] != problem.dim:
        raise DimensionError("states do not match the problem dimension")
    tth = part.theta_times(theta)
    E = np.diff(Y, axis=0)
    Yth = theta * Y[1:] + (1.0 - theta) * Y[:-1]
    per, viol, dom = [], [], []
    diss = 0.0
    for i in range(part.N):
        q = problem.load(tth[i]) - problem.A @ Yth[i]
        val, dist, psi_e = _finite_part(problem, q, E[i])
        if math.isinf(psi_e):
            dom.append(i + 1)
        else:
            diss += psi_e
        if _infeasible(problem, q, dist):
            viol.append((i + 1, dist))
        per.append(val)
    return _assemble(per, initial_penalty(problem, Y[0]), diss, viol, dom)


def _load_integral(problem: Problem, a: float, b: float) -> np.ndarray:
    """``int_a^b l(t) dt`` (exact for the piecewise-linear load)."""
    load = problem.load
    pts = np.concatenate([[a], load.knots_between(a, b), [b]])
    vals = np.array([load(t) for t in pts])
    return np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(pts)[:, None], axis=0)


def eval_F(problem: Problem, traj: Trajectory, quadrature: Quadrature = THETA_POINT,
           theta: float = 1.0) -> FunctionalReport:
    """Continuous functional of the piecewise-linear interpolant of ``traj``.

    ``theta`` only matters for the theta-point quadrature.
    """
    if traj.dim != problem.dim:
        raise DimensionError("trajectory does not match the problem dimension")
    part = traj.partition
    if abs(part.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ContractError("trajectory horizon differs from the load horizon")
    if quadrature.kind == "theta":
        return eval_Fn_theta(problem, traj.states, part, theta)
    Y = traj.states
    t = part.times
    per, viol, dom = [], [], []
    diss = 0.0
    for i in range(part.N):
        a, b = t[i], t[i + 1]
        e = Y[i + 1] - Y[i]
        psi_e = problem.potential.psi(e)
        check_t = [a, *problem.load.knots_between(a, b), b]
        if quadrature.kind == "sampled":
            check_t += list(a + (b - a) * np.arange(1, quadrature.k + 1) / (quadrature.k + 1))
        worst, worst_q = 0.0, None
        for tc in check_t:
            q = problem.load(tc) - problem.A @ traj.hat(tc)
            dist = problem.potential.dist(q)
            if _infeasible(problem, q, dist) and dist > worst:
                worst, worst_q = dist, q
        if worst_q is not None:
            viol.append((i + 1, worst))
        if math.isinf(psi_e):
            dom.append(i + 1)
            per.append(math.inf)
            continue
        diss += psi_e
        work = float(_load_integral(problem, a, b) @ e) / (b - a)
        per.append(psi_e - work + problem.energy.phi(Y[i + 1]) - problem.energy.phi(Y[i]))
    return _assemble(per, initial_penalty(problem, Y[0]), diss, viol, dom)


def interval_contributions(problem: Problem, traj: Trajectory) -> np.ndarray:
    """Per-interval values of the continuous functional (``inf`` where infeasible)."""
    rep = eval_F(problem, traj, EXACT)
    out = rep.per_interval.copy()
    for i, _ in rep.feasibility_violations:
        out[i - 1] = math.inf
    return out


def stability_check(problem: Problem, t: float, y) -> tuple[bool, float]:
    """Whether ``l(t) - A y`` lies in ``C*``, with its distance to ``C*``."""
    y = _check_state(problem, y)
    q = problem.stress(t, y)
    dist = problem.potential.dist(q)
    return (not _infeasible(problem, q, dist)), dist


def _power_integral(problem: Problem, traj: Trajectory) -> float:
    """``int_0^T <l'(t), y_hat(t)> dt``, exact for piecewise-linear data."""
    load = problem.load
    pts = np.union1d(traj.times, load.times)
    pts = pts[pts <= traj.partition.T]
    total = 0.0
    slopes = load.slopes
    for a, b in zip(pts[:-1], pts[1:]):
        k = min(int(np.searchsorted(load.times, 0.5 * (a + b), side="right")) - 1, slopes.shape[0] - 1)
        ym = 0.5 * (traj.hat(a) + traj.hat(b))
        total += float(slopes[k] @ ym) * (b - a)
    return total


def energy_balance_residual(problem: Problem, traj: Trajectory, theta: float | None = None) -> float:
    """Signed residual ``LHS - RHS`` of an energy identity.

    With ``theta=None`` the continuous identity

        phi(y(T)) - <l(T), y(T)> + int psi(y') = phi(y(0)) - <l(0), y(0)> - int <l', y>

    is evaluated on the piecewise-linear interpolant; the left side exceeds
    the right side for stable trajectories that are not solutions.  With a
    ``theta`` the discrete identity satisfied exactly by the theta-scheme is
    used instead:

        phi(y^N) + sum psi(e^i) + (2 theta - 1) sum phi(e^i) = phi(y^0) + sum <l(t^i_theta), e^i>.
    """
    E = problem.energy
    Y = traj.states
    incr = traj.increments
    diss = 0.0
    for e in incr:
        val = problem.potential.psi(e)
        if math.isinf(val):
            return math.inf
        diss += val
    if theta is None:
        T = traj.partition.T
        lhs = E.phi(Y[-1]) - float(problem.load(T) @ Y[-1]) + diss
        rhs = E.phi(Y[0]) - float(problem.load(0.0) @ Y[0]) - _power_integral(problem, traj)
        return lhs - rhs
    tth = traj.partition.theta_times(theta)
    numerical = (2.0 * theta - 1.0) * sum(E.phi(e) for e in incr)
    work = sum(float(problem.load(t) @ e) for t, e in zip(tth, incr))
    return E.phi(Y[-1]) + diss + numerical - E.phi(Y[0]) - work
