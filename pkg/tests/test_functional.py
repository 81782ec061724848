"""The Lagrangian, the path functionals and the energy identities."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varplast.dissipation import ConeCapped, DissipationPotential
from varplast.energy import QuadraticEnergy
from varplast.errors import ContractError, DimensionError
from varplast.functional import (EXACT, THETA_POINT, Quadrature, energy_balance_residual,
                                 eval_F, eval_Fn_theta, initial_penalty, interval_contributions,
                                 lagrangian, sampled, stability_check)
from varplast.materials import analytic_1d, play_problem
from varplast.problem import LoadPath, Problem
from varplast.solver import solve_theta
from varplast.trajectory import Partition, Trajectory

from support import MODELS, THETAS, model_problem

RAMP = play_problem()  # a = sigma = 1, l = t on [0, 2]
DELTA = 0.1


def ramp_exact(N):
    part = Partition.uniform(2.0, N)
    return Trajectory(part, analytic_1d(1.0, 1.0, 1.0, part.times)[:, None])


def stable_non_solution(N=40):
    """``y = max(0, t - 1) + DELTA t``: the stress stays in [-1, 1] but the state creeps."""
    part = Partition.uniform(2.0, N)
    t = part.times
    return Trajectory(part, (np.maximum(0.0, t - 1.0) + DELTA * t)[:, None])


class TestLagrangian:
    def test_hand_value(self):
        # stress 0.5, rate 1: psi = 1, <q, p> = 0.5
        assert lagrangian(RAMP, 0.5, [0.0], [1.0]) == pytest.approx(0.5)

    def test_zero_on_solution(self):
        assert lagrangian(RAMP, 1.5, [0.5], [1.0]) == pytest.approx(0.0, abs=1e-15)

    def test_infinite_off_stress_set(self):
        assert math.isinf(lagrangian(RAMP, 2.0, [0.0], [1.0]))

    def test_infinite_off_domain(self):
        P = Problem(QuadraticEnergy.from_matrix(np.eye(2)),
                    DissipationPotential(ConeCapped(1.0, 1)),
                    LoadPath.ramp([1.0, 0.0], 1.0, 1.0), np.zeros(2))
        assert math.isinf(lagrangian(P, 0.5, [0.0, 0.0], [1.0, 0.5]))

    def test_dimension(self):
        with pytest.raises(DimensionError):
            lagrangian(RAMP, 0.5, [0.0, 0.0], [1.0])

    @settings(max_examples=100, deadline=None)
    @given(t=st.floats(0.0, 1.0), y=st.lists(st.floats(-3, 3), min_size=3, max_size=3),
           p=st.lists(st.floats(-3, 3), min_size=3, max_size=3))
    def test_nonnegative(self, t, y, p):
        P = model_problem("combined", seed=0)
        assert lagrangian(P, t, y, p) >= -1e-12


class TestDiscreteFunctional:
    def test_hand_value(self):
        # theta = 1/2, states (0, 0.2, 1): stresses 0.4 and 0.9 at t = 0.5, 1.5
        part = Partition.uniform(2.0, 2)
        rep = eval_Fn_theta(RAMP, np.array([0.0, 0.2, 1.0]), part, 0.5)
        assert rep.per_interval == pytest.approx([0.2 - 0.4 * 0.2, 0.8 - 0.9 * 0.8])
        assert rep.total == pytest.approx(0.2)
        assert rep.dissipation_total == pytest.approx(1.0)
        assert rep.feasible

    def test_infeasible_stress(self):
        part = Partition.uniform(2.0, 2)
        rep = eval_Fn_theta(RAMP, np.array([0.0, 0.0, 0.5]), part, 1.0)
        assert math.isinf(rep.total)
        assert rep.feasibility_violations[0][0] == 2
        assert rep.feasibility_violations[0][1] == pytest.approx(0.5)

    def test_domain_violation(self):
        P = Problem(QuadraticEnergy.from_matrix(np.eye(2)),
                    DissipationPotential(ConeCapped(1.0, 1)),
                    LoadPath.ramp([1.0, 0.0], 1.0, 1.0), np.zeros(2))
        rep = eval_Fn_theta(P, np.array([[0.0, 0.0], [0.5, 0.1]]), Partition.uniform(1.0, 1), 1.0)
        assert rep.domain_violations == [1]
        assert math.isinf(rep.total)

    def test_initial_penalty(self):
        part = Partition.uniform(2.0, 2)
        rep = eval_Fn_theta(RAMP, np.array([0.3, 0.3, 1.0]), part, 1.0)
        assert rep.initial_penalty == pytest.approx(0.5 * 0.09 + 0.09)
        assert initial_penalty(RAMP, [0.3]) == pytest.approx(0.135)

    def test_state_count_checked(self):
        with pytest.raises(ContractError):
            eval_Fn_theta(RAMP, np.zeros(4), Partition.uniform(2.0, 2), 1.0)

    @pytest.mark.parametrize("name", sorted(MODELS))
    @pytest.mark.parametrize("theta", THETAS)
    def test_theta_quadrature_matches(self, name, theta):
        P = model_problem(name, seed=21)
        part = Partition.uniform(P.T, 20)
        tr = solve_theta(P, part, theta)
        bump = np.abs(np.sin(np.arange(tr.states.size))).reshape(tr.states.shape)
        noisy = tr.with_states(tr.states + 1e-3 * bump)
        a = eval_F(P, noisy, THETA_POINT, theta)
        b = eval_Fn_theta(P, noisy.states, part, theta)
        if math.isinf(b.total):
            assert math.isinf(a.total)
        else:
            assert abs(a.total - b.total) <= 1e-12


class TestContinuousFunctional:
    def test_zero_on_exact_solution(self):
        """The kink t = 1 is a node, so the interpolant is the exact evolution."""
        rep = eval_F(RAMP, ramp_exact(20), EXACT)
        assert rep.feasible
        assert abs(rep.total) <= 1e-12

    def test_positive_on_stable_non_solution(self):
        tr = stable_non_solution()
        rep = eval_F(RAMP, tr, EXACT)
        assert rep.feasible
        # t < 1: rate DELTA, stress t (1 - DELTA); t > 1: rate 1 + DELTA, stress 1 - DELTA t
        # int_0^1 DELTA (1 - t (1 - DELTA)) dt + int_1^2 (1 + DELTA) DELTA t dt
        expected = DELTA * (1 - 0.5 * (1 - DELTA)) + 1.5 * (1 + DELTA) * DELTA
        assert rep.total == pytest.approx(expected, rel=1e-12)

    def test_interior_knot_violation_detected(self):
        """A load spike between nodes is caught at the knot."""
        load = LoadPath(np.array([0.0, 0.5, 1.0]), np.array([[0.0], [3.0], [0.0]]))
        P = play_problem(load=load)
        tr = Trajectory(Partition.uniform(1.0, 1), np.zeros((2, 1)))
        assert math.isinf(eval_F(P, tr, EXACT).total)
        assert math.isinf(interval_contributions(P, tr)[0])

    def test_sampled_agrees_on_finite_part(self):
        tr = stable_non_solution(10)
        a = eval_F(RAMP, tr, EXACT)
        b = eval_F(RAMP, tr, sampled(4))
        assert b.total == pytest.approx(a.total, rel=1e-14)

    def test_quadrature_validation(self):
        with pytest.raises(ContractError):
            Quadrature("simpson")
        with pytest.raises(ContractError):
            sampled(0)

    def test_horizon_checked(self):
        tr = Trajectory(Partition.uniform(1.0, 2), np.zeros((3, 1)))
        with pytest.raises(ContractError):
            eval_F(RAMP, tr, EXACT)


class TestStability:
    def test_values(self):
        ok, dist = stability_check(RAMP, 1.5, [0.0])
        assert not ok and dist == pytest.approx(0.5)
        ok, dist = stability_check(RAMP, 1.5, [0.5])
        assert ok and dist == 0.0


class TestEnergyBalance:
    @pytest.mark.parametrize("name", sorted(MODELS))
    @pytest.mark.parametrize("theta", THETAS)
    def test_discrete_identity_on_exact_solves(self, name, theta):
        P = model_problem(name, seed=31)
        tr = solve_theta(P, Partition.uniform(P.T, 40), theta)
        assert abs(energy_balance_residual(P, tr, theta)) <= 1e-9

    def test_continuous_identity_on_exact_solution(self):
        assert abs(energy_balance_residual(RAMP, ramp_exact(20))) <= 1e-12

    def test_continuous_residual_positive_for_non_solution(self):
        res = energy_balance_residual(RAMP, stable_non_solution())
        assert res > 1e-3

    def test_continuous_residual_equals_functional(self):
        """For stable trajectories starting at y0 the residual is the functional itself."""
        tr = stable_non_solution()
        assert energy_balance_residual(RAMP, tr) == pytest.approx(eval_F(RAMP, tr, EXACT).total,
                                                                  rel=1e-12)

    def test_infinite_off_domain(self):
        P = Problem(QuadraticEnergy.from_matrix(np.eye(2)),
                    DissipationPotential(ConeCapped(1.0, 1)),
                    LoadPath.ramp([1.0, 0.0], 1.0, 1.0), np.zeros(2))
        tr = Trajectory(Partition.uniform(1.0, 1), np.array([[0.0, 0.0], [0.5, 0.0]]))
        assert math.isinf(energy_balance_residual(P, tr, 1.0))
