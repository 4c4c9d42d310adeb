import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar
from hypothesis import given, settings, strategies as st

from mtransform.concentrated import (cluster_relaxation, constrained_transform_concentrated, degenerate_formula,
                                     iterate_transform, limit_M_infinity, locking_energy, lower_bound_general_kernel,
                                     m_transform_concentrated, phase_function_concentrated, theta_one_sided_slopes)
from mtransform.kernels import ConcentratedKernel, ExplicitKernel
from mtransform.oracle import LatticeProblem, minimize_finite_lattice, minimize_periodic_cell
from mtransform.piecewise import convex_envelope
from mtransform.potentials import convex_affine, double_well, from_branches, truncated_quadratic

TRUNC = truncated_quadratic(1.0)
DWELL = double_well()
M2 = ConcentratedKernel(0.5, 2, 0.25)


class TestLockingEnergy:
    def test_middle_regime_value(self):
        assert float(locking_energy(TRUNC, M2, 1)(1.0)) == pytest.approx(23 / 6, abs=1e-13)

    @pytest.mark.parametrize("f", [TRUNC, DWELL, truncated_quadratic(2.0)], ids=["truncq", "dwell", "truncq2"])
    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_closed_form_matches_general_split(self, f, n):
        m = ConcentratedKernel(0.3, 3, 0.2)
        z = np.linspace(-2, 3, 101)
        a, b = locking_energy(f, m, n)(z), locking_energy(f, m, n, closed_form=False)(z)
        ok = np.isfinite(a) | np.isfinite(b)
        assert np.allclose(a[ok], b[ok], atol=1e-11)

    def test_single_branch_domains(self):
        P0, P2 = locking_energy(TRUNC, M2, 0), locking_energy(TRUNC, M2, 2)
        assert float(P0(0.5)) == pytest.approx(0.25 + 2 * (0.5 + 1.0) * 0.25)
        assert math.isinf(float(P0(1.5)))
        assert math.isinf(float(locking_energy(DWELL, M2, 2)(-0.1)))
        assert float(locking_energy(DWELL, M2, 2)(0.4)) == pytest.approx(0.36 + 3 * 0.16)
        assert float(P2(1.5)) == pytest.approx(1 + 3 * 2.25)

    def test_n_range(self):
        with pytest.raises(ValueError):
            locking_energy(TRUNC, M2, 3)

    def test_periodic_cell_agrees(self):
        P = locking_energy(DWELL, M2, 1)
        for z in (-0.6, -0.1, 0.2, 0.9):
            assert minimize_periodic_cell(2, z, M2, DWELL, [1, -1]) == pytest.approx(float(P(z)), abs=1e-12)


class TestTransform:
    def test_double_well_plateau_ends(self):
        T = m_transform_concentrated(DWELL, M2)
        mid = next(p for p in T.diagram.plateaus if p.n == 1)
        assert (mid.s_minus, mid.s_plus) == pytest.approx((-1 / 8, 1 / 8), abs=1e-13)

    def test_three_plateaus(self):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(0.5, 3, 0.25))
        assert [p.theta for p in T.diagram.plateaus] == pytest.approx([0, 1 / 3, 2 / 3, 1])
        for p in T.diagram.plateaus[1:-1]:
            assert T.theta(0.5 * (p.s_minus + p.s_plus)) == pytest.approx(p.theta, abs=1e-15)

    def test_qhat_is_envelope_of_locking_minimum(self):
        T = m_transform_concentrated(DWELL, M2)
        z = np.linspace(-2, 2, 401)
        lows = np.min([locking_energy(DWELL, M2, n)(z) for n in range(3)], axis=0)
        assert np.all(T.Qhat(z) <= lows + 1e-12)
        for p in T.diagram.plateaus:
            inside = z[(z > p.s_minus) & (z < p.s_plus)]
            assert np.allclose(T.Qhat(inside), locking_energy(DWELL, M2, p.n)(inside), atol=1e-12)

    def test_tangency_at_plateau_ends(self):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(0.4, 3, 0.3))
        for b in T.diagram.bridges:
            for end, n in ((b.z_left, b.left), (b.z_right, b.right)):
                P = locking_energy(TRUNC, ConcentratedKernel(0.4, 3, 0.3), n)
                assert b.slope * end + b.intercept == pytest.approx(float(P(end)), abs=1e-10)
                assert b.slope == pytest.approx(float(P.derivative(end)), abs=1e-8)

    def test_q_is_qhat_minus_moment(self):
        T = m_transform_concentrated(TRUNC, M2)
        z = np.linspace(-1, 3, 41)
        assert np.allclose(T.Q(z), T.Qhat(z) - 3.0 * z * z, atol=1e-12)

    def test_convex_potential_is_unchanged(self):
        f = from_branches(0.0, (1, 0, 0), (2, 0, 0))
        T = m_transform_concentrated(f, M2)
        z = np.linspace(-2, 2, 41)
        assert np.allclose(T.Q(z), f(z), atol=1e-12)

    def test_cluster_relaxation_value(self):
        m = ConcentratedKernel(0.1, 2, 0.1)
        v = float(cluster_relaxation(DWELL, m)(0.0))
        assert v == pytest.approx(0.16666666666666663, abs=1e-14)
        assert v == pytest.approx(minimize_periodic_cell(2, 0.0, m, DWELL, [1, -1]), abs=1e-12)

    def test_nearest_neighbour_case(self):
        m = ConcentratedKernel(0.5, 1, 0.0)
        T = m_transform_concentrated(DWELL, m)
        z = np.linspace(-2, 2, 81)
        env = convex_envelope(DWELL.as_piecewise().shift_quadratic(1.0))
        assert np.allclose(T.Qhat(z), env(z), atol=1e-12)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(0.05, 2.0), st.integers(2, 4), st.floats(0.05, 1.0))
    def test_theta_monotone_and_qhat_convex(self, m1, M, mM):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(m1, M, mM))
        z = np.linspace(-1, 4, 501)
        th = T.theta(z)
        assert np.all(np.diff(th) >= -1e-12)
        q = T.Qhat(z)
        assert np.all(q[:-2] + q[2:] - 2 * q[1:-1] >= -1e-9)


class TestPhaseFunction:
    def test_bridge_midpoint(self):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(0.5, 3, 0.25))
        b = T.diagram.bridges[0]
        assert phase_function_concentrated(T.diagram, 0.5 * (b.z_left + b.z_right)) == pytest.approx(1 / 6)

    def test_below_first_plateau_end(self):
        T = m_transform_concentrated(TRUNC, M2)
        assert T.theta(-5.0) == 0.0 and T.theta(50.0) == 1.0


class TestDegenerate:
    def test_thresholds(self):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(0.0, 2, 0.5))
        b = T.diagram.bridges[0]
        assert (b.z_left, b.z_right) == pytest.approx((math.sqrt(2 / 5), math.sqrt(5 / 8)), abs=1e-14)
        assert [p.theta for p in T.diagram.plateaus] == [0.0, 0.5]

    def test_formula_matches_transform(self):
        T = m_transform_concentrated(TRUNC, ConcentratedKernel(0.0, 3, 0.25))
        z = np.linspace(-1, 3, 81)
        assert np.allclose(degenerate_formula(3, 0.25, z), T.Q(z), atol=1e-12)

    @pytest.mark.parametrize("z", [0.3, 1.2])
    def test_periodic_oracle(self, z):
        k = ConcentratedKernel(0.0, 2, 0.5)
        T = m_transform_concentrated(TRUNC, k)
        for N in (6, 8):
            per = minimize_finite_lattice(LatticeProblem(N, z, k, TRUNC, mode="periodic")).per_site
            assert per == pytest.approx(float(T.Qhat(z)), abs=1e-10)


class TestConstrained:
    def test_half_fraction_double_well(self):
        v = constrained_transform_concentrated(DWELL, M2, 0.5, -0.25)
        assert v == pytest.approx(0.75, abs=1e-13)
        assert v - 3.0 * 0.0625 == pytest.approx(0.5625, abs=1e-13)
        assert minimize_periodic_cell(2, -0.25, M2, DWELL, [1, -1]) == pytest.approx(0.75, abs=1e-12)

    def test_printed_regime_formula(self):
        # on z in (theta - 1, (theta - 1)/2] the energy including a_m z^2 is 2 z^2/(1 - theta) + theta
        for z in (-0.45, -0.3, -0.25):
            v = constrained_transform_concentrated(DWELL, M2, 0.5, z)
            assert v == pytest.approx(4 * z * z + 0.5, abs=1e-12)

    def test_locking_fraction_collapses(self):
        P = locking_energy(TRUNC, M2, 1)
        assert constrained_transform_concentrated(TRUNC, M2, 0.5, 0.9) == pytest.approx(float(P(0.9)))

    def test_min_over_fractions_recovers_qhat(self):
        T = m_transform_concentrated(TRUNC, M2)
        # convex in theta between neighbouring locking fractions
        for z in (0.3, 0.8, 1.2, 2.0):
            best = min(minimize_scalar(lambda t: constrained_transform_concentrated(TRUNC, M2, t, z),
                                       bounds=(lo, lo + 0.5), method="bounded",
                                       options={"xatol": 1e-10}).fun for lo in (0.0, 0.5))
            best = min(best, *(constrained_transform_concentrated(TRUNC, M2, t, z) for t in (0.0, 0.5, 1.0)))
            assert float(T.Qhat(z)) - 1e-12 <= best <= float(T.Qhat(z)) + 1e-8

    def test_one_sided_slopes_are_finite(self):
        left, right = theta_one_sided_slopes(TRUNC, M2, 1, 1.0)
        assert np.isfinite(left) and np.isfinite(right)
        assert math.isnan(theta_one_sided_slopes(TRUNC, M2, 0, 1.0)[0])


class TestIteration:
    def test_convex_sequence_is_constant(self):
        f = from_branches(0.0, (1, 0, 0), (1, 0, 0))
        res = iterate_transform(f, M2, 3)
        assert all(np.array_equal(res.iterates[0], it) for it in res.iterates)

    def test_touch_points_and_monotone_distance(self):
        res = iterate_transform(DWELL, M2, 4)
        assert max(res.touch_errors[1:]) < 1e-10
        assert all(b <= a + 1e-14 for a, b in zip(res.distances, res.distances[1:]))
        assert res.distances[-1] < res.distances[0]

    def test_first_iterate_matches_closed_form(self):
        res = iterate_transform(DWELL, M2, 2)
        T = m_transform_concentrated(DWELL, M2)
        assert np.allclose(res.iterates[1], T.Q(res.grid), atol=1e-10)

    def test_curve_interpolates_grid(self):
        res = iterate_transform(DWELL, M2, 2)
        c = res.curve(2, 0.5)
        assert np.allclose(c(res.grid), res.iterates[2], atol=1e-12)


class TestBounds:
    def test_concentrated_input_is_exact(self):
        T = m_transform_concentrated(DWELL, M2)
        for z in (-0.5, 0.0, 0.3):
            assert lower_bound_general_kernel(DWELL, M2, z) == pytest.approx(float(T.Qhat(z)), abs=1e-12)

    def test_convex_potential(self):
        f = from_branches(0.0, (1, 0, 0), (1, 0, 0))
        k = ExplicitKernel((0.4, 0.2, 0.1))
        assert lower_bound_general_kernel(f, k, 0.7) == pytest.approx(0.49 + k.moment().a_m * 0.49)

    def test_two_far_coefficients_below_oracle(self):
        k = ExplicitKernel((0.0, 0.2, 0.2))
        lb = lower_bound_general_kernel(DWELL, k, 0.0)
        assert lb == pytest.approx(0.08695652173913042, abs=1e-14)
        per = minimize_finite_lattice(LatticeProblem(12, 0.0, k, DWELL, mode="periodic")).per_site
        assert per == pytest.approx(0.2857142857142857, abs=1e-10)
        assert lb <= per

    def test_convex_affine_bound_below_oracle(self):
        f, k = convex_affine(0.5), ExplicitKernel((0.3, 0.2, 0.1))
        for z in (0.5, 1.0, 1.5):
            lb = lower_bound_general_kernel(f, k, z)
            per = minimize_finite_lattice(LatticeProblem(12, z, k, f, mode="periodic")).per_site
            assert lb <= per + 1e-10


class TestLargeM:
    def test_truncated_small_strain(self):
        assert limit_M_infinity(TRUNC, 0.5, 0.5) == pytest.approx(0.25)

    def test_double_well_inner(self):
        m1 = 0.5
        assert limit_M_infinity(DWELL, m1, 0.2) == pytest.approx(-2 * m1 * 0.04 + 2 * m1 / 2)

    def test_large_strain_second_branch(self):
        assert limit_M_infinity(TRUNC, 0.5, 5.0) == 1.0
        assert limit_M_infinity(DWELL, 0.5, 3.0) == pytest.approx(4.0)

    def test_transforms_approach_limit(self):
        z = np.linspace(-1.5, 1.5, 61)
        lim = limit_M_infinity(DWELL, 0.5, z)
        errs = [np.max(np.abs(m_transform_concentrated(DWELL, ConcentratedKernel(0.5, M, 0.25)).Q(z) - lim))
                for M in (2, 4, 8, 16)]
        assert all(b < a for a, b in zip(errs, errs[1:]))

    def test_unsupported_family(self):
        with pytest.raises(ValueError):
            limit_M_infinity(convex_affine(0.5), 0.5, 0.0)
