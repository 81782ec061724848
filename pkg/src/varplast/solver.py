"""The theta-scheme for ``d psi(y') + A y = l``.

Step ``i`` computes ``y^i = y^{i-1} + d`` where ``d`` minimizes

    1/2 <M d, d> - <s, d> + psi(d),   M = theta A,   s = l(t^i_theta) - A y^{i-1},

which is the incremental problem rewritten in the increment.  The stress
at the theta-point is ``q = s - M d`` and the step is optimal iff
``q in C*`` and ``psi(d) = <q, d>``.  Steps are certified by checking both
relations; the scalar ``psi(d) - <q, d>`` is the step's contribution to the
discrete functional.

Three inner solvers are used, in this order:

* closed-form return maps when ``C*`` is a norm ball, a capped cone, or a
  product of those and ``M`` does not couple the blocks;
* accelerated proximal gradient on the primal problem (step ``1/lambda_max(M)``);
* accelerated projected gradient on the dual problem over ``C*`` for
  pulled-back sets, whose projection is itself iterative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dissipation import ConeCapped, NormBall, Product, Pullback, feasibility_band
from .errors import ContractError, ConvergenceError
from .problem import Problem
from .trajectory import Partition, StepDiagnostics, Trajectory

MAX_ITER = 100_000
THETA_MESSAGE = "theta must lie in [1/2,1]"


def check_theta(theta: float, allow_unstable: bool = False) -> float:
    theta = float(theta)
    if not (0.0 < theta <= 1.0) or (theta < 0.5 and not allow_unstable):
        raise ContractError(THETA_MESSAGE)
    return theta


def kkt_tolerance(problem: Problem, load_value: np.ndarray) -> float:
    return problem.tolerances.tau_kkt * (1.0 + float(np.linalg.norm(load_value)))


@dataclass(frozen=True)
class StepCheck:
    """Optimality data of an increment ``d`` for the data ``s``."""

    stress: np.ndarray
    projected: np.ndarray
    distance: float
    dissipation: float
    residual: float

    def certified(self, kkt_tol: float, feas_rel: float) -> bool:
        return (self.distance <= feasibility_band(self.stress, feas_rel)
                and self.residual <= kkt_tol)


def step_check(problem: Problem, M: np.ndarray, s: np.ndarray, d: np.ndarray) -> StepCheck:
    pot = problem.potential
    q = s - M @ d
    pq = pot.project(q)
    dist = float(np.linalg.norm(q - pq))
    psi_d = pot.psi(d)
    res = math.inf if math.isinf(psi_d) else psi_d - float(pq @ d)
    return StepCheck(q, pq, dist, psi_d, res)


# closed-form return maps ---------------------------------------------------

class _BallBlock:
    def __init__(self, sl: slice, radius: float, M: np.ndarray):
        self.sl = sl
        self.radius = radius
        self.lam, self.Q = np.linalg.eigh(M)

    def solve(self, s: np.ndarray) -> np.ndarray:
        ns = float(np.linalg.norm(s))
        sig = self.radius
        if ns <= sig:
            return np.zeros_like(s)
        st = self.Q.T @ s
        lam = self.lam
        f = lambda r: float(np.sum((st / (lam * r + sig)) ** 2)) - 1.0
        lo = (ns - sig) / lam[-1]
        hi = (ns - sig) / lam[0]
        if hi <= lo or f(hi) >= 0.0:
            r = hi
        elif f(lo) <= 0.0:
            r = lo
        else:
            r = brentq(f, lo, hi, xtol=1e-15 * hi, rtol=4 * np.finfo(float).eps, maxiter=500)
        return self.Q @ (r * st / (lam * r + sig))


class _ConeBlock:
    def __init__(self, sl: slice, radius: float, M: np.ndarray):
        self.sl = sl
        self.radius = radius
        self.lam, self.Q = np.linalg.eigh(M[:-1, :-1])
        self.h = float(M[-1, -1])

    def solve(self, s: np.ndarray) -> np.ndarray:
        sq, sg = s[:-1], float(s[-1])
        c = self.radius - sg
        nq = float(np.linalg.norm(sq))
        d = np.zeros_like(s)
        if nq <= c:
            return d
        h = self.h
        st = self.Q.T @ sq
        r0 = 0.0
        if c < 0:
            r0 = -c / h
            dp_free = self.Q @ (st / self.lam)
            if float(np.linalg.norm(dp_free)) <= r0:
                d[:-1] = dp_free
                d[-1] = r0
                return d
        mu = self.lam + h
        f = lambda r: float(np.sum((st / (mu * r + c)) ** 2)) - 1.0
        hi = max((nq - c) / mu[0], r0)
        while f(hi) > 0.0:
            hi = 2.0 * hi if hi > 0 else 1.0
        lo = r0
        if c == 0.0 and lo == 0.0:
            lo = (nq - c) / mu[-1]
        r = brentq(f, lo, hi, xtol=1e-15 * max(hi, 1e-300), rtol=4 * np.finfo(float).eps,
                   maxiter=500) if f(lo) > 0.0 else lo
        dp = self.Q @ (r * st / (mu * r + c))
        d[:-1] = dp
        d[-1] = max(r, float(np.linalg.norm(dp)))
        return d


def _leaf_sets(cstar, start: int = 0):
    if isinstance(cstar, Product):
        out = []
        off = start
        for part in cstar.parts:
            sub = _leaf_sets(part, off)
            if sub is None:
                return None
            out.extend(sub)
            off += part.dim
        return out
    if isinstance(cstar, (NormBall, ConeCapped)):
        return [(slice(start, start + cstar.dim), cstar)]
    return None


def _closed_form_blocks(cstar, M: np.ndarray):
    leaves = _leaf_sets(cstar)
    if leaves is None:
        return None
    scale = max(float(np.max(np.abs(M))), 1e-300)
    mask = np.zeros_like(M, dtype=bool)
    blocks = []
    for sl, leaf in leaves:
        mask[sl, sl] = True
        Mb = M[sl, sl]
        if isinstance(leaf, ConeCapped):
            if np.max(np.abs(Mb[:-1, -1]), initial=0.0) > 1e-14 * scale or Mb[-1, -1] <= 0:
                return None
            if np.linalg.eigvalsh(Mb[:-1, :-1])[0] <= 0:
                return None
            blocks.append(_ConeBlock(sl, leaf.radius, Mb))
        else:
            if np.linalg.eigvalsh(Mb)[0] <= 0:
                return None
            blocks.append(_BallBlock(sl, leaf.radius, Mb))
    if np.max(np.abs(M[~mask]), initial=0.0) > 1e-14 * scale:
        return None
    return blocks


# the per-problem step solver ----------------------------------------------

class StepSolver:
    """Incremental minimization for a fixed problem and ``theta``."""

    def __init__(self, problem: Problem, theta: float, allow_unstable: bool = False,
                 max_iter: int | None = None):
        self.problem = problem
        self.theta = check_theta(theta, allow_unstable)
        self.M = self.theta * problem.A
        eig = self.theta * problem.energy.eigenvalues
        self.lam_min = float(eig[0])
        self.lam_max = float(eig[-1])
        self.max_iter = MAX_ITER if max_iter is None else int(max_iter)
        cstar = problem.potential.cstar
        self.blocks = None if isinstance(cstar, Pullback) else _closed_form_blocks(cstar, self.M)
        self.dual = isinstance(cstar, Pullback)

    def data(self, y_prev: np.ndarray, t_theta: float):
        """``l(t_theta)`` and the shifted load ``s = l(t_theta) - A y_prev``."""
        lt = self.problem.load(t_theta)
        return lt, lt - self.problem.A @ y_prev

    def check_prev(self, y_prev: np.ndarray) -> None:
        if not self.problem.potential.in_domain(y_prev):
            raise ContractError("previous state is not in the domain cone")

    # exact step

    def solve(self, s: np.ndarray, kkt_tol: float) -> tuple[np.ndarray, StepDiagnostics]:
        feas = self.problem.tolerances.tau_feas
        if self.blocks is not None:
            d = np.zeros_like(s)
            for b in self.blocks:
                d[b.sl] = b.solve(s[b.sl])
            chk = step_check(self.problem, self.M, s, d)
            if chk.certified(kkt_tol, feas):
                method = "elastic" if not np.any(d) else "return_map"
                return d, StepDiagnostics(0, chk.residual, chk.dissipation, method, chk.distance)
        if self.dual:
            return self._dual(s, lambda chk: chk.certified(kkt_tol, feas), "dual")
        return self._primal(s, kkt_tol, feas)

    def _primal(self, s, kkt_tol, feas):
        pot = self.problem.potential
        M = self.M
        if self.lam_max <= 0:
            raise ContractError("theta A must be nonzero")
        t = 1.0 / self.lam_max
        d = np.zeros_like(s)
        z = d.copy()
        tk = 1.0
        chk = step_check(self.problem, M, s, d)
        if chk.certified(kkt_tol, feas):
            return d, StepDiagnostics(0, chk.residual, chk.dissipation, "elastic", chk.distance)
        for k in range(1, self.max_iter + 1):
            x = z - t * (M @ z - s)
            d_new = x - t * pot.project(x / t)
            tk_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            if float((z - d_new) @ (d_new - d)) > 0:
                tk_new = 1.0
                z = d_new
            else:
                z = d_new + ((tk - 1.0) / tk_new) * (d_new - d)
            d, tk = d_new, tk_new
            if k < 20 or k % 5 == 0:
                chk = step_check(self.problem, M, s, d)
                if chk.certified(kkt_tol, feas):
                    return d, StepDiagnostics(k, chk.residual, chk.dissipation, "prox", chk.distance)
        chk = step_check(self.problem, M, s, d)
        raise ConvergenceError("proximal iteration did not reach the optimality certificate",
                               max(chk.residual, chk.distance), self.max_iter)

    # dual iteration: c in the parent set, d = M^{-1}(s - B^T c)

    def _dual(self, s, accept, method, c0=None):
        cstar = self.problem.potential.cstar
        if self.lam_min <= 0:
            raise ContractError("the dual iteration needs a positive definite energy")
        if isinstance(cstar, Pullback):
            parent, B = cstar.parent, cstar.basis
        else:
            parent, B = cstar, np.eye(s.size)
        Minv = np.linalg.inv(self.M)
        step = self.lam_min
        c = parent.project(B @ s if c0 is None else c0)
        z = c.copy()
        tk = 1.0
        chk = None
        for k in range(self.max_iter + 1):
            d = Minv @ (s - B.T @ c)
            d = self._repair(d)
            chk = step_check(self.problem, self.M, s, d)
            if accept(chk):
                return d, StepDiagnostics(k, chk.residual, chk.dissipation, method, chk.distance)
            c_new = parent.project(z + step * (B @ (Minv @ (s - B.T @ z))))
            tk_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * tk * tk))
            if float((z - c_new) @ (c_new - c)) > 0:
                tk_new = 1.0
                z = c_new
            else:
                z = c_new + ((tk - 1.0) / tk_new) * (c_new - c)
            c, tk = c_new, tk_new
        raise ConvergenceError("dual iteration did not reach the optimality certificate",
                               chk.residual if chk is not None else math.inf, self.max_iter)

    def _repair(self, d: np.ndarray) -> np.ndarray:
        """Move ``d`` into the domain cone without leaving the stress set.

        For capped cones with decoupled ``M``, raising the scalar component to
        ``|p|`` only lowers the scalar stress, which keeps it in ``C*``.
        """
        if self.blocks is None:
            return d
        out = d
        for b in self.blocks:
            if isinstance(b, _ConeBlock):
                blk = out[b.sl]
                need = float(np.linalg.norm(blk[:-1]))
                if blk[-1] < need:
                    if out is d:
                        out = d.copy()
                    out[b.sl.stop - 1] = need
        return out

    # inexact step

    def solve_inexact(self, s: np.ndarray, gap_tol: float, c0=None):
        """Dual iterate stopped as soon as the step residual is ``<= gap_tol``."""
        feas = self.problem.tolerances.tau_feas

        def accept(chk: StepCheck) -> bool:
            return (chk.distance <= feasibility_band(chk.stress, feas)
                    and chk.residual <= gap_tol)

        return self._dual(s, accept, "inexact", c0)


def incremental_step(problem: Problem, y_prev, t_theta: float, theta: float,
                     allow_unstable: bool = False) -> np.ndarray:
    """Minimizer of ``theta phi(y) - <l(t_theta) - (1 - theta) A y_prev, y> + psi(y - y_prev)``."""
    solver = StepSolver(problem, theta, allow_unstable)
    y_prev = np.asarray(y_prev, dtype=float).reshape(-1)
    if y_prev.size != problem.dim:
        raise ContractError("previous state has the wrong dimension")
    solver.check_prev(y_prev)
    lt, s = solver.data(y_prev, t_theta)
    d, _ = solver.solve(s, kkt_tolerance(problem, lt))
    return y_prev + d


def _check_partition(problem: Problem, part: Partition) -> None:
    if not isinstance(part, Partition):
        raise ContractError("a Partition is required")
    if abs(part.T - problem.T) > 1e-12 * max(1.0, problem.T):
        raise ContractError(f"partition ends at {part.T}, load horizon is {problem.T}")


def solve_theta(problem: Problem, part: Partition, theta: float,
                allow_unstable: bool = False) -> Trajectory:
    """Exact theta-scheme on ``part`` starting from ``problem.y0``."""
    _check_partition(problem, part)
    solver = StepSolver(problem, theta, allow_unstable)
    tth = part.theta_times(solver.theta)
    Y = np.empty((part.N + 1, problem.dim))
    Y[0] = problem.y0
    diags = []
    for i in range(1, part.N + 1):
        lt, s = solver.data(Y[i - 1], tth[i - 1])
        d, diag = solver.solve(s, kkt_tolerance(problem, lt))
        Y[i] = Y[i - 1] + d
        diags.append(diag)
    return Trajectory(part, Y, tuple(diags))


def solve_theta_inexact(problem: Problem, part: Partition, theta: float,
                        inner_tol: float, allow_unstable: bool = False) -> Trajectory:
    """Theta-scheme whose steps stop once their residual is ``<= inner_tol / N``.

    Each step is warm-started from the previous theta-point stress and
    always returns a feasible stress, so the discrete functional of the
    result is at most ``inner_tol``.
    """
    if not inner_tol > 0:
        raise ContractError("inner_tol must be positive")
    _check_partition(problem, part)
    solver = StepSolver(problem, theta, allow_unstable)
    tth = part.theta_times(solver.theta)
    gap_tol = inner_tol / part.N
    cstar = problem.potential.cstar
    Y = np.empty((part.N + 1, problem.dim))
    Y[0] = problem.y0
    diags = []
    c_prev = None
    for i in range(1, part.N + 1):
        lt, s = solver.data(Y[i - 1], tth[i - 1])
        d, diag = solver.solve_inexact(s, gap_tol, c_prev)
        Y[i] = Y[i - 1] + d
        diags.append(diag)
        q = s - solver.M @ d
        if isinstance(cstar, Pullback):
            c_prev = None
        else:
            c_prev = cstar.project(q)
    return Trajectory(part, Y, tuple(diags))
