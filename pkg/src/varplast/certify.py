"""A posteriori certificates, Lipschitz checks, adaptivity and rate studies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError
from .functional import FunctionalReport, eval_Fn_theta, interval_contributions
from .problem import Problem
from .solver import check_theta, solve_theta
from .trajectory import Partition, Trajectory


def _norm_bound(value: float, alpha: float) -> float:
    if math.isinf(value):
        return math.inf
    return math.sqrt(2.0 * max(value, 0.0) / alpha)


@dataclass
class Certificate:
    """Bounds on the distance of a candidate to the exact discrete solution.

    ``uniform_phi_bound`` bounds ``max_i phi(y^i - v^i)`` and
    ``uniform_norm_bound`` bounds ``max_i |y^i - v^i|``; the latter needs
    coercivity on ``C - C`` (``applicable``).
    """

    functional_value: float
    alpha: float
    uniform_phi_bound: float
    uniform_norm_bound: float
    applicable: bool
    per_interval_budget: float
    report: FunctionalReport | None = field(default=None, repr=False)

    @classmethod
    def from_value(cls, value: float, alpha: float, applicable: bool, n_intervals: int,
                   report: FunctionalReport | None = None, budget: float | None = None):
        if budget is None:
            budget = value / n_intervals if n_intervals else value
        return cls(value, alpha, value, _norm_bound(value, alpha), applicable, budget, report)

    def to_dict(self) -> dict:
        return {
            "functional_value": self.functional_value,
            "alpha": self.alpha,
            "uniform_phi_bound": self.uniform_phi_bound,
            "uniform_norm_bound": self.uniform_norm_bound,
            "applicable": self.applicable,
            "per_interval_budget": self.per_interval_budget,
        }


def certify_distance(problem: Problem, candidate: Trajectory, theta: float) -> Certificate:
    """Certificate from the discrete functional of ``candidate``.

    ``per_interval_budget`` is the functional value spread evenly over the
    intervals.
    """
    theta = check_theta(theta)
    rep = eval_Fn_theta(problem, candidate.states, candidate.partition, theta)
    return Certificate.from_value(rep.total, problem.alpha,
                                  problem.energy.scope.supports_distance_bounds,
                                  candidate.partition.N, rep)


# Lipschitz bounds -----------------------------------------------------------

@dataclass
class LipschitzReport:
    max_slope: float
    max_nodal_slope: float
    bound: float
    applicable: bool
    reason: str = ""

    @property
    def margin(self) -> float:
        return self.bound - self.max_slope if self.applicable else math.inf

    def holds(self, slack: float = 1e-8) -> bool:
        return (not self.applicable) or self.max_slope <= self.bound + slack

    def to_dict(self) -> dict:
        return {
            "max_slope": self.max_slope,
            "max_nodal_slope": self.max_nodal_slope,
            "bound": self.bound,
            "applicable": self.applicable,
            "margin": self.margin,
            "reason": self.reason,
        }


def theta_interpolant_slopes(traj: Trajectory, theta: float) -> np.ndarray:
    """Slopes of the interpolant through ``(0, y^0)`` and ``(t^i_theta, y^i_theta)``.

    For ``theta = 1`` these are the ordinary difference quotients.
    """
    part = traj.partition
    pts_t = np.concatenate([[0.0], part.theta_times(theta)])
    pts_y = np.vstack([traj.states[:1], traj.theta_states(theta)])
    return np.diff(pts_y, axis=0) / np.diff(pts_t)[:, None]


def verify_lipschitz(problem: Problem, traj: Trajectory, theta: float,
                     rtol_uniform: float = 1e-9) -> LipschitzReport:
    """Compare the discrete velocity with the stability bound.

    The velocity measured is that of the theta-interpolant; the largest
    plain difference quotient is reported alongside.
    """
    theta = check_theta(theta)
    lip = problem.load.lipschitz_bound
    alpha = problem.alpha
    nodal = traj.slopes
    max_nodal = float(np.max(np.linalg.norm(nodal, axis=1))) if nodal.size else 0.0
    slopes = theta_interpolant_slopes(traj, theta)
    max_slope = float(np.max(np.linalg.norm(slopes, axis=1))) if slopes.size else 0.0
    if not problem.energy.scope.supports_distance_bounds:
        return LipschitzReport(max_slope, max_nodal, math.inf, False,
                               "coercivity on C - C is not available")
    if theta in (0.5, 1.0):
        return LipschitzReport(max_slope, max_nodal, lip / alpha, True)
    if not traj.partition.is_uniform(rtol_uniform):
        return LipschitzReport(max_slope, max_nodal, math.inf, False,
                               "bound for theta in (1/2,1) needs constant steps")
    return LipschitzReport(max_slope, max_nodal, lip / (alpha * (2.0 * theta - 1.0)), True)


# adaptivity -----------------------------------------------------------------

@dataclass
class AdaptResult:
    partition: Partition
    trajectory: Trajectory
    certificate: Certificate
    rounds: int
    success: bool
    history: list = field(default_factory=list)
    refined_times: list = field(default_factory=list)


def adapt_partition(problem: Problem, theta: float, tol: float, max_rounds: int = 30,
                    initial: Partition | int = 5, divisor: float = 4.0) -> AdaptResult:
    """Bisect intervals until the continuous functional is evenly below budget.

    Each round solves the scheme, evaluates the per-interval integrals of
    the Lagrangian along the piecewise-linear interpolant and bisects every
    interval above ``alpha * tol^2 / (divisor * N)``.  On success the
    functional is at most ``alpha * tol^2 / divisor``, so the certified
    uniform distance to the exact evolution is at most ``tol * sqrt(2 / divisor)``.
    """
    if not tol > 0:
        raise ContractError("tol must be positive")
    if not divisor >= 2.0:
        raise ContractError("divisor must be >= 2 for the bound to meet tol")
    theta = check_theta(theta)
    part = initial if isinstance(initial, Partition) else Partition.uniform(problem.T, int(initial))
    applicable = problem.energy.scope.supports_distance_bounds
    alpha = problem.alpha
    history = []
    refined = []
    rounds = 0
    while True:
        traj = solve_theta(problem, part, theta)
        contrib = interval_contributions(problem, traj)
        budget = alpha * tol * tol / (divisor * part.N)
        over = [i + 1 for i, c in enumerate(contrib) if not c <= budget]
        value = float(np.sum(contrib))
        history.append({"round": rounds, "N": part.N, "functional": value,
                        "budget": budget, "refined": len(over)})
        if not over or rounds >= max_rounds:
            break
        refined.extend(float(0.5 * (part.times[i - 1] + part.times[i])) for i in over)
        part = part.bisect(over)
        rounds += 1
    cert = Certificate.from_value(value, alpha, applicable, part.N, budget=budget)
    return AdaptResult(part, traj, cert, rounds, not over, history, refined)


# convergence rates -----------------------------------------------------------

@dataclass
class RateReport:
    N: list
    steps: list
    errors: list
    slope: float
    skipped: bool
    threshold: float = 0.4

    @property
    def passed(self) -> bool:
        return self.skipped or self.slope >= self.threshold

    def to_dict(self) -> dict:
        return {"N": list(self.N), "steps": list(self.steps), "errors": list(self.errors),
                "slope": self.slope, "skipped": self.skipped, "passed": self.passed}


def uniform_error(traj: Trajectory, oracle: Callable[[np.ndarray], np.ndarray],
                  breakpoints: Sequence[float] = ()) -> float:
    """``max_t |y_hat(t) - oracle(t)|``, exact for piecewise-linear oracles.

    ``breakpoints`` lists the oracle's kinks; together with the partition
    nodes they contain every point where the difference can peak.
    """
    T = traj.partition.T
    t = np.union1d(traj.times, [b for b in breakpoints if 0.0 <= b <= T])
    ref = np.asarray(oracle(t), dtype=float).reshape(t.size, -1)
    return float(np.max(np.linalg.norm(traj.hat(t) - ref, axis=1)))


def fit_rate(N: Sequence[int], errors: Sequence[float]) -> float:
    """Least-squares slope of ``-log(error)`` against ``log(N)``."""
    x = np.log(np.asarray(N, dtype=float))
    y = np.log(np.asarray(errors, dtype=float))
    return float(-np.polyfit(x, y, 1)[0])


def convergence_study(problem: Problem, theta: float, refinements: Sequence[int],
                      oracle: Callable | None = None, breakpoints: Sequence[float] = (),
                      reference: Trajectory | None = None, threshold: float = 0.4,
                      floor_rel: float = 1e-12) -> RateReport:
    """Uniform errors on uniform partitions and their fitted rate.

    The exact solution is given either as ``oracle`` (with its kinks in
    ``breakpoints``) or as a fine ``reference`` trajectory.  Errors are
    floored at rounding level; when every error sits at that floor the scheme
    is exact on the data and the rate test is skipped.
    """
    refinements = [int(n) for n in refinements]
    if len(refinements) < 3:
        raise ContractError("a convergence study needs at least 3 refinement levels")
    if (oracle is None) == (reference is None):
        raise ContractError("give exactly one of oracle and reference")
    theta = check_theta(theta)
    if reference is not None:
        ref = reference
        oracle = lambda t: ref.hat(t)
        breakpoints = list(ref.times)
    scale = 1.0 + float(np.max(np.abs(oracle(np.linspace(0.0, problem.T, 33)))))
    floor = floor_rel * scale
    errors, steps = [], []
    for n in refinements:
        part = Partition.uniform(problem.T, n)
        traj = solve_theta(problem, part, theta)
        errors.append(max(uniform_error(traj, oracle, breakpoints), floor))
        steps.append(part.diameter)
    skipped = all(e <= 10.0 * floor for e in errors)
    slope = math.inf if skipped else fit_rate(refinements, errors)
    return RateReport(refinements, steps, errors, slope, skipped, threshold)
