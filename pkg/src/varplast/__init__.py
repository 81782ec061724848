"""Solver and certificates for finite-dimensional rate-independent evolutions.

The evolution ``d psi(y') + A y = l(t)``, ``y(0) = y0`` is discretized by the
theta-scheme; discrete solutions are characterized as zeros of a nonnegative
functional whose value on any candidate bounds its distance to the solution.
"""

from .certify import (Certificate, adapt_partition, certify_distance, convergence_study,
                      verify_lipschitz)
from .dissipation import (ConeCapped, DissipationPotential, HalfspaceIntersection, NormBall,
                          Product, Pullback, dist_to_cstar, eval_psi, project_cstar,
                          verify_conjugacy)
from .energy import CoercivityScope, QuadraticEnergy, apply_A, estimate_alpha, eval_phi
from .errors import ContractError, ConvergenceError, DimensionError, UnstableInitialState
from .functional import (EXACT, THETA_POINT, FunctionalReport, energy_balance_residual, eval_F,
                         eval_Fn_theta, lagrangian, sampled, stability_check)
from .galerkin import Subspace, nested_convergence, restrict, space_time_table
from .materials import MaterialModel, ModelKind, analytic_1d, assemble
from .problem import LoadPath, Problem, Tolerances
from .solver import incremental_step, solve_theta, solve_theta_inexact
from .trajectory import Partition, Trajectory

__version__ = "0.1.0"
