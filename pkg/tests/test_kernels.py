import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtransform.kernels import (ConcentratedKernel, ExplicitKernel, ExponentialKernel, NearestKernel,
                                kernel_second_moment, kernel_truncation_range, m_stability_margin, zero_kernel)
from mtransform.potentials import (convex_affine, double_well, double_well_biquadratic, quartic_double_well,
                                   truncated_quadratic)


class TestPotentials:
    def test_named_values(self):
        f = truncated_quadratic(1.0)
        assert f(0.5) == 0.25
        assert f(2.0) == 1.0
        assert double_well()(1.0) == 0.0

    def test_shift_adds_quadratic(self):
        f = double_well()
        z = np.linspace(-2, 2, 9)
        assert np.allclose(f.shifted(0.4)(z), f(z) + 0.4 * z * z, atol=1e-15)

    def test_branches_must_agree(self):
        from mtransform.potentials import from_branches
        with pytest.raises(ValueError):
            from_branches(0.0, (1, 0, 0), (1, 0, 1))

    def test_biquadratic_second_well(self):
        f = double_well_biquadratic(3.0)
        assert f(3.0) == pytest.approx(0.0, abs=1e-15)
        assert f(1.0) == pytest.approx(1.0)

    def test_convex_affine_geometry(self):
        f = convex_affine(0.5)
        assert f(2.0) == pytest.approx(2.0)
        assert f.kink_jump() == pytest.approx(-1.0)


class TestMoments:
    def test_concentrated(self):
        assert kernel_second_moment(ConcentratedKernel(0.5, 2, 0.25)).a_m == 3.0

    def test_exponential_matches_partial_sums(self):
        k = ExponentialKernel(math.log(2), 1.0)
        n = np.arange(1, 200)
        partial = 2 * np.sum(n * n * 2.0 ** (-n))
        assert k.moment().a_m == pytest.approx(12.0, abs=1e-12)
        assert partial == pytest.approx(12.0, abs=1e-12)

    def test_nearest(self):
        assert NearestKernel(0.7).moment().a_m == pytest.approx(1.4)

    def test_explicit_generic_sum(self):
        assert ExplicitKernel((1.0, 0.5, 0.25)).moment().a_m == pytest.approx(2 * (1 + 2 + 2.25))

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.2, 4.0), st.floats(0.1, 5.0))
    def test_exponential_closed_form_against_truncated_sum(self, sigma, rho):
        k = ExponentialKernel(sigma, rho)
        n_max = k.truncation_range(1e-300)
        n = np.arange(1, n_max + 1)
        brute = 2 * np.sum(n * n * rho * np.exp(-sigma * n))
        assert k.moment().a_m == pytest.approx(brute, rel=1e-12)


class TestTruncation:
    def test_exponential(self):
        assert kernel_truncation_range(ExponentialKernel(1.0, 1.0), 1e-12) == 28

    def test_concentrated(self):
        assert kernel_truncation_range(ConcentratedKernel(0.1, 5, 0.2)) == 5

    def test_explicit(self):
        assert kernel_truncation_range(ExplicitKernel(tuple(range(7)))) == 7

    def test_range_is_first_coefficient_below_tolerance(self):
        k = ExponentialKernel(0.37, 2.0)
        n = k.truncation_range(1e-9)
        assert k.coefficient(n) <= 1e-9 < k.coefficient(n - 1)


class TestStability:
    def test_quartic_double_well_critical_sigma_equals_m1(self):
        for m1 in (0.3, 0.7, 1.5):
            rep = m_stability_margin(quartic_double_well(), ConcentratedKernel(m1, 2, 0.1))
            assert rep.critical_sigma == pytest.approx(m1)

    def test_quartic_double_well_with_unit_nearest_neighbours_is_stable(self):
        assert m_stability_margin(quartic_double_well(), NearestKernel(1.0)).stable is True

    def test_convex_is_stable_for_any_kernel(self):
        assert m_stability_margin(convex_affine(1.5), zero_kernel()).stable is True

    def test_concave_kink_is_never_stable(self):
        rep = m_stability_margin(double_well(), ConcentratedKernel(10.0, 2, 1.0))
        assert rep.stable is False and rep.critical_sigma is None

    def test_unknown_for_long_range_kernels(self):
        rep = m_stability_margin(quartic_double_well(), ExponentialKernel(3.0, 0.01))
        assert rep.stable is None

    def test_invalid_kernels(self):
        with pytest.raises(ValueError):
            ExponentialKernel(-1.0)
        with pytest.raises(ValueError):
            ConcentratedKernel(-0.1, 2, 0.1)
        with pytest.raises(ValueError):
            ExplicitKernel((1.0,), decay=2.5)
