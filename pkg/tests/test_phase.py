import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtransform.concentrated import constrained_transform_concentrated
from mtransform.kernels import ConcentratedKernel, ExponentialKernel, NearestKernel
from mtransform.oracle import minimize_with_phase_constraint
from mtransform.phase import (constrained_convex_potential, constrained_convexification_zero_kernel, farey_grid,
                              phase_multifunction)
from mtransform.piecewise import convex_envelope, infimal_split
from mtransform.potentials import MINUS, PLUS, double_well, from_branches, double_well_biquadratic, exp_abs, truncated_quadratic

TRUNC = truncated_quadratic(1.0)
SPLIT_SQUARE = from_branches(0.0, (1, 0, 0), (1, 0, 0))


def square(x):
    return x * x


class TestZeroKernel:
    @pytest.mark.parametrize("theta", [0.2, 0.5, 0.9])
    def test_truncated_broken_regime(self, theta):
        for z in (theta, theta + 0.3, 5.0):
            assert constrained_convexification_zero_kernel(TRUNC, theta, z) == pytest.approx(theta)

    def test_truncated_elastic_regime(self):
        theta, z = 0.25, 0.1
        expected = (1 - theta) * ((z - theta) / (1 - theta)) ** 2 + theta
        assert constrained_convexification_zero_kernel(TRUNC, theta, z) == pytest.approx(expected)

    def test_infeasible_extremes(self):
        assert math.isinf(constrained_convexification_zero_kernel(TRUNC, 0.0, 1.5))
        assert math.isinf(constrained_convexification_zero_kernel(TRUNC, 1.0, 0.5))
        assert constrained_convexification_zero_kernel(TRUNC, 0.0, 0.5) == 0.25

    @pytest.mark.parametrize("t", [1.5, 3.0, 10.0])
    def test_biquadratic_closed_form_matches_split(self, t):
        f = double_well_biquadratic(t)
        for theta in (0.1, 0.5, 0.8):
            split = infimal_split(f.branch_function(MINUS), 1 - theta, f.branch_function(PLUS), theta)
            for z in np.linspace(-2, t + 2, 23):
                assert constrained_convexification_zero_kernel(f, theta, z) == pytest.approx(float(split(z)),
                                                                                             abs=1e-10)

    def test_fracture_limit_of_biquadratic(self):
        theta = 0.3
        z = np.linspace(-1, 3, 17)
        trunc = np.array([constrained_convexification_zero_kernel(TRUNC, theta, x) for x in z])
        errs = [np.max(np.abs([constrained_convexification_zero_kernel(double_well_biquadratic(t), theta, x)
                               for x in z] - trunc)) for t in (10.0, 100.0, 1000.0)]
        assert errs[0] > errs[1] > errs[2] and errs[2] < 1e-2

    def test_callable_exponential_well(self):
        f = exp_abs()
        for theta in (0.2, 0.5, 0.8):
            for z in (-0.5, 0.5, 2.0):
                assert constrained_convexification_zero_kernel(f, theta, z) <= 1e-6

    def test_range(self):
        with pytest.raises(ValueError):
            constrained_convexification_zero_kernel(TRUNC, 1.5, 0.0)

    def test_min_over_theta_is_convex_envelope(self):
        f = double_well()
        env = convex_envelope(f.as_piecewise())
        grid = farey_grid(24)
        for z in np.linspace(-1.5, 1.5, 13):
            best = min(constrained_convexification_zero_kernel(f, float(t), float(z)) for t in grid)
            assert best == pytest.approx(float(env(z)), abs=2e-3)
            assert best >= float(env(z)) - 1e-12


class TestConvexPotential:
    def test_half_fraction(self):
        a = 3.0
        assert constrained_convex_potential(square, a, 0.5, 1.0, 0.0) == pytest.approx(2 + a)

    def test_full_fraction(self):
        assert constrained_convex_potential(square, 3.0, 1.0, 1.0, 0.0) == 1.0
        near = constrained_convex_potential(square, 3.0, 1 - 1e-9, 1.0, 0.0)
        assert near == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("theta", [0.1, 0.5, 0.9])
    def test_at_threshold(self, theta):
        assert constrained_convex_potential(square, 2.0, theta, 0.7, 0.7, hat=True) == pytest.approx(0.49 + 2 * 0.49)

    def test_kernel_argument(self):
        k = ConcentratedKernel(0.5, 2, 0.25)
        assert constrained_convex_potential(square, k, 0.5, 1.0, 0.0) == pytest.approx(5.0)

    @pytest.mark.parametrize("z", [-0.4, 1.0])
    def test_exact_for_nearest_neighbours(self, z):
        m = NearestKernel(1.5)
        for N in (2, 4, 8):
            per = minimize_with_phase_constraint(N, z, 1, 2, m, SPLIT_SQUARE, mode="periodic").per_site
            assert per == pytest.approx(constrained_convex_potential(square, m, 0.5, z, 0.0, hat=True), abs=1e-12)

    @pytest.mark.parametrize("m", [ConcentratedKernel(0.5, 2, 0.25), ExponentialKernel(1.0)], ids=["conc", "exp"])
    def test_upper_bound_for_long_range_kernels(self, m):
        # alternating phases beat the macroscopic split; frozen periodic-oracle values
        frozen = {"ConcentratedKernel": (0.96, 6.0), "ExponentialKernel": (1.0936812259982873, 6.835507662489298)}
        for z, ref in zip((-0.4, 1.0), frozen[type(m).__name__]):
            formula = constrained_convex_potential(square, m, 0.5, z, 0.0, hat=True)
            per = [minimize_with_phase_constraint(N, z, 1, 2, m, SPLIT_SQUARE, mode="periodic").per_site
                   for N in (2, 4, 8)]
            assert per == pytest.approx([ref] * 3, abs=1e-10)
            assert max(per) < formula - 0.3

    def test_concentrated_interpolation_reproduces_oracle(self):
        m = ConcentratedKernel(0.5, 2, 0.25)
        assert constrained_transform_concentrated(SPLIT_SQUARE, m, 0.5, -0.4) == pytest.approx(0.96, abs=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95), st.floats(-2, 2), st.floats(-2, 2))
    def test_joint_convexity(self, t1, t2, z1, z2):
        E = lambda t, z: constrained_convex_potential(square, 2.0, t, z, 0.3, hat=True)
        slack = 0.5 * E(t1, z1) + 0.5 * E(t2, z2) - E(0.5 * (t1 + t2), 0.5 * (z1 + z2))
        assert slack >= -1e-9


class TestMultifunction:
    def energy_convex(self, t, z):
        return constrained_convex_potential(square, 3.0, t, z, 0.0)

    def test_convex_three_cases(self):
        below = phase_multifunction(self.energy_convex, -0.5)
        at = phase_multifunction(self.energy_convex, 0.0)
        above = phase_multifunction(self.energy_convex, 0.5)
        assert (below.theta_lo, below.theta_hi) == (0.0, 0.0)
        assert (at.theta_lo, at.theta_hi, at.theta) == (0.0, 1.0, 0.0)
        assert (above.theta_lo, above.theta_hi) == (1.0, 1.0)

    def test_truncated_zero_kernel_not_attained(self):
        for z in (0.5, 2.0):
            pm = phase_multifunction(lambda t, x: constrained_convexification_zero_kernel(TRUNC, t, x), z)
            assert pm.theta == 0.0 and pm.empty_closure

    def test_exponential_well_full_interval(self):
        f = exp_abs()
        for z in (-0.5, 0.5, 2.0):
            pm = phase_multifunction(lambda t, x: constrained_convexification_zero_kernel(f, t, x), z)
            assert (pm.theta_lo, pm.theta_hi, pm.theta) == (0.0, 1.0, 0.0)

    def test_concentrated_plateau(self):
        f, m = double_well(), ConcentratedKernel(0.5, 2, 0.25)
        pm = phase_multifunction(lambda t, z: constrained_transform_concentrated(f, m, t, z), 0.0)
        assert pm.theta == pytest.approx(0.5) and pm.contains(0.5)

    def test_row(self):
        row = phase_multifunction(self.energy_convex, 0.0).to_row()
        assert set(row) == {"z", "theta_min", "theta_lo", "theta_hi", "empty_closure_flag"}

    def test_farey_grid(self):
        g = farey_grid(5)
        assert len(g) == 11 and g[0] == 0.0 and g[-1] == 1.0
        assert np.all(np.diff(g) > 0)
