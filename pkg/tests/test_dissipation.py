"""Characteristic sets, support functions and projections."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from varplast.dissipation import (ConeCapped, DissipationPotential, HalfspaceIntersection,
                                  NormBall, Product, Pullback, dist_to_cstar, eval_psi,
                                  isotropic_potential, kinematic_potential, project_cstar,
                                  verify_conjugacy)
from varplast.errors import DimensionError

KIN = kinematic_potential(1.0)
ISO = isotropic_potential(1.0)

finite = st.floats(min_value=-5.0, max_value=5.0, allow_nan=False)
# quarter grid: |p| - xi is either zero or far outside the cone band
quarter = st.integers(min_value=-20, max_value=20).map(lambda k: k / 4.0)


def vec(n, elements=finite):
    return st.lists(elements, min_size=n, max_size=n).map(np.array)


def cone_capped_grid(radius=1.0, q_max=4.0, n=4001):
    """Points of the boundary ``|q| + g = radius`` plus a column below the apex."""
    q = np.linspace(-q_max, q_max, n)
    boundary = np.column_stack([q, radius - np.abs(q)])
    inner = np.column_stack([np.zeros(200), np.linspace(-10.0, radius, 200)])
    return np.vstack([boundary, inner])


def box(radius=1.0):
    return HalfspaceIntersection(np.array([[1.0, 0], [-1, 0], [0, 1], [0, -1]]),
                                 radius * np.ones(4))


SETS = {
    "ball1": NormBall(1.0, 1),
    "ball3": NormBall(2.0, 3),
    "cone1": ConeCapped(1.0, 1),
    "cone2": ConeCapped(1.5, 2),
    "product": Product((NormBall(1.0, 2), ConeCapped(0.5, 1))),
    "box": box(),
}


class TestEvalPsi:
    def test_kinematic_zero(self):
        assert eval_psi(KIN, [0.0]) == 0.0

    def test_kinematic_homogeneous(self):
        assert eval_psi(KIN, [2.0]) == 2.0

    def test_isotropic_inside_cone_against_grid(self):
        grid = cone_capped_grid()
        v = np.array([0.5, 1.0])
        assert eval_psi(ISO, v) == pytest.approx(1.0, abs=1e-12)
        assert float(np.max(grid @ v)) == pytest.approx(1.0, abs=1e-9)

    def test_isotropic_outside_cone_is_infinite(self):
        v = np.array([2.0, 1.0])
        assert math.isinf(eval_psi(ISO, v))
        # the grid supremum grows with the grid: the support is unbounded
        small = float(np.max(cone_capped_grid(q_max=4.0) @ v))
        large = float(np.max(cone_capped_grid(q_max=40.0) @ v))
        assert large > small + 30.0

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            eval_psi(ISO, [1.0])

    @pytest.mark.parametrize("name", ["ball1", "cone1", "box"])
    def test_support_equals_grid_supremum(self, name):
        """psi(v) equals the supremum of <q, v> over >= 1e4 points of C*."""
        cs = SETS[name]
        if name == "ball1":
            pts = np.linspace(-1.0, 1.0, 10_001)[:, None]
        elif name == "cone1":
            pts = cone_capped_grid(n=10_001)
        else:
            s = np.linspace(-1.0, 1.0, 2_501)
            pts = np.vstack([np.column_stack([s, np.ones_like(s)]),
                             np.column_stack([s, -np.ones_like(s)]),
                             np.column_stack([np.ones_like(s), s]),
                             np.column_stack([-np.ones_like(s), s])])
        rng = np.random.default_rng(3)
        for v in cs.sample_domain(rng, 50):
            psi = cs.support(v)
            brute = float(np.max(pts @ v))
            assert psi == pytest.approx(brute, rel=1e-6, abs=1e-9)

    def test_box_support_is_l1_norm(self):
        rng = np.random.default_rng(0)
        cs = box(2.0)
        for v in rng.normal(size=(20, 2)):
            assert cs.support(v) == pytest.approx(2.0 * np.abs(v).sum(), rel=1e-12)

    def test_halfspace_unbounded_direction(self):
        cs = HalfspaceIntersection(np.array([[1.0, 0.0]]), np.array([1.0]))
        assert cs.support(np.array([1.0, 0.0])) == pytest.approx(1.0)
        assert math.isinf(cs.support(np.array([0.0, 1.0])))
        assert not cs.in_domain(np.array([-1.0, 0.0]))

    def test_infinite_exactly_off_domain(self):
        rng = np.random.default_rng(1)
        for v in rng.normal(size=(500, 2)):
            assert math.isinf(ISO.psi(v)) == (not ISO.in_domain(v))


class TestDistance:
    def test_ball_interior(self):
        assert dist_to_cstar(KIN, [0.5]) == 0.0

    def test_ball_exterior(self):
        assert dist_to_cstar(KIN, [3.0]) == 2.0

    def test_cone_capped_against_grid(self):
        q = np.array([1.0, 1.0])
        q_grid = np.linspace(-3.0, 3.0, 600_001)
        boundary = np.column_stack([q_grid, 1.0 - np.abs(q_grid)])
        brute = float(np.min(np.linalg.norm(boundary - q, axis=1)))
        assert dist_to_cstar(ISO, q) == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-12)
        assert brute == pytest.approx(1.0 / math.sqrt(2.0), abs=1e-9)

    def test_distance_matches_projection(self):
        rng = np.random.default_rng(2)
        for name, cs in SETS.items():
            for q in rng.normal(scale=3.0, size=(50, cs.dim)):
                assert cs.dist(q) == pytest.approx(np.linalg.norm(q - cs.project(q)), abs=1e-9)


class TestProjection:
    def test_ball_radial(self):
        assert project_cstar(KIN, [3.0]) == pytest.approx([1.0])

    def test_interior_point_unchanged(self):
        q = np.array([0.2, 0.3])
        assert np.array_equal(project_cstar(ISO, q), q)

    def test_cone_capped_hand_kkt(self):
        # facet q + g = 1 with normal (1, 1): (2, 2) - t (1, 1) with 2 - t + 2 - t = 1
        p = project_cstar(ISO, [2.0, 2.0])
        assert p == pytest.approx([0.5, 0.5], abs=1e-14)
        grid = np.linspace(-3.0, 3.0, 600_001)
        boundary = np.column_stack([grid, 1.0 - np.abs(grid)])
        best = boundary[np.argmin(np.linalg.norm(boundary - [2.0, 2.0], axis=1))]
        assert best == pytest.approx([0.5, 0.5], abs=1e-5)

    def test_cone_capped_apex_region(self):
        assert project_cstar(ISO, [0.5, 5.0]) == pytest.approx([0.0, 1.0])

    def test_box_is_clip(self):
        rng = np.random.default_rng(4)
        cs = box(1.0)
        for q in rng.normal(scale=3.0, size=(30, 2)):
            assert cs.project(q) == pytest.approx(np.clip(q, -1.0, 1.0), abs=1e-10)

    @pytest.mark.parametrize("name", sorted(SETS))
    @settings(max_examples=40, deadline=None)
    @given(data=st.data())
    def test_idempotent_and_nonexpansive(self, name, data):
        cs = SETS[name]
        q1 = data.draw(vec(cs.dim))
        q2 = data.draw(vec(cs.dim))
        p1, p2 = cs.project(q1), cs.project(q2)
        assert np.max(np.abs(cs.project(p1) - p1)) <= 1e-12 * (1 + np.linalg.norm(p1))
        assert np.linalg.norm(p1 - p2) <= np.linalg.norm(q1 - q2) + 1e-9

    @pytest.mark.parametrize("name", sorted(SETS))
    def test_projection_contains_origin(self, name):
        cs = SETS[name]
        assert np.linalg.norm(cs.project(np.zeros(cs.dim))) <= 1e-12


class TestPsiProperties:
    @pytest.mark.parametrize("name", ["ball3", "cone2", "product"])
    @settings(max_examples=60, deadline=None)
    @given(data=st.data(), lam=st.just(0.0) | st.floats(min_value=1e-2, max_value=10.0))
    def test_positive_homogeneity(self, name, data, lam):
        cs = SETS[name]
        v = data.draw(vec(cs.dim, quarter))
        a, b = cs.support(lam * v), cs.support(v)
        if math.isinf(b):
            assert lam == 0 or math.isinf(a)
        else:
            assert a == pytest.approx(lam * b, rel=1e-9, abs=1e-9)

    @pytest.mark.parametrize("name", ["ball3", "cone2", "product"])
    @settings(max_examples=60, deadline=None)
    @given(data=st.data())
    def test_triangle_inequality(self, name, data):
        cs = SETS[name]
        b = data.draw(vec(cs.dim, quarter))
        c = data.draw(vec(cs.dim, quarter))
        assert cs.support(b + c) <= cs.support(b) + cs.support(c) + 1e-9


class TestPullback:
    def test_ball_pullback_is_ball(self):
        rng = np.random.default_rng(5)
        Q, _ = np.linalg.qr(rng.normal(size=(4, 4)))
        pb = Pullback(NormBall(1.0, 4), Q[:, :2])
        for q in rng.normal(scale=2.0, size=(20, 2)):
            assert pb.project(q) == pytest.approx(NormBall(1.0, 2).project(q), abs=1e-10)
            v = rng.normal(size=2)
            assert pb.support(v) == pytest.approx(np.linalg.norm(v), rel=1e-12)

    def test_cone_pullback_variational_inequality(self):
        rng = np.random.default_rng(6)
        Q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        parent = ConeCapped(1.0, 2)
        pb = Pullback(parent, Q[:, :2])
        others = parent.sample(rng, 400) @ Q[:, :2]
        for q in rng.normal(scale=2.0, size=(10, 2)):
            p = pb.project(q)
            # <q - p, z - p> <= 0 for every z in B^T C*
            assert np.max((others - p) @ (q - p)) <= 1e-7

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            Pullback(NormBall(1.0, 3), np.eye(2))


class TestVerifyConjugacy:
    def test_equality_case(self):
        v, q = np.array([1.0]), np.array([1.0])
        assert KIN.psi(v) + KIN.conjugate(q) == pytest.approx(float(q @ v))

    def test_strict_inequality(self):
        v, q = np.array([1.0]), np.array([0.3])
        assert KIN.psi(v) + KIN.conjugate(q) > float(q @ v)

    def test_conjugate_is_indicator(self):
        assert KIN.conjugate([0.9]) == 0.0
        assert math.isinf(KIN.conjugate([1.1]))

    @pytest.mark.parametrize("name", ["ball1", "ball3", "cone1", "cone2", "product"])
    def test_no_violations(self, name):
        rep = verify_conjugacy(DissipationPotential(SETS[name]), 1000, seed=7)
        assert rep.passed, rep
        assert rep.equality_checks > 0 and rep.fenchel_checks > 0

    def test_halfspace_no_violations(self):
        rep = verify_conjugacy(DissipationPotential(box(1.5)), 200, seed=8)
        assert rep.passed, rep

    def test_rejects_empty_sample(self):
        with pytest.raises(ValueError):
            verify_conjugacy(KIN, 0)

    def test_detects_wrong_support(self):
        class Wrong(NormBall):
            def support(self, v):
                return 0.5 * super().support(v)

        rep = verify_conjugacy(DissipationPotential(Wrong(1.0, 2)), 200, seed=9)
        assert not rep.passed


class TestConstruction:
    def test_ball_radius_positive(self):
        with pytest.raises(ValueError):
            NormBall(0.0)

    def test_halfspace_needs_origin(self):
        with pytest.raises(ValueError):
            HalfspaceIntersection(np.array([[1.0]]), np.array([-1.0]))

    def test_product_dimension(self):
        assert SETS["product"].dim == 4
