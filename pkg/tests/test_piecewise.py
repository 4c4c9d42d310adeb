import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mtransform.piecewise import (INF, PiecewiseQuadratic, common_tangent, conjugate, convex_envelope,
                                  from_pieces, infimal_split, lower_hull, quadratic, sampled_convex_envelope)
from mtransform.potentials import double_well, truncated_quadratic

Z = np.linspace(-3, 3, 601)


def test_double_well_envelope_is_flat_between_the_wells():
    env = convex_envelope(double_well().as_piecewise())
    expected = np.where(np.abs(Z) <= 1, 0.0, (np.abs(Z) - 1) ** 2)
    assert np.max(np.abs(env(Z) - expected)) < 1e-14


def test_truncated_quadratic_envelope_on_the_half_line():
    # min{z^2, 1}: the envelope is z^2 for z <= 0 and 0 beyond
    env = convex_envelope(truncated_quadratic(1.0).as_piecewise())
    assert np.max(np.abs(env(Z) - np.where(Z <= 0, Z * Z, 0.0))) < 1e-14


def test_convex_input_is_a_fixed_point():
    q = quadratic(1.0)
    assert np.max(np.abs(convex_envelope(q)(Z) - Z * Z)) == 0


def test_shift_quadratic_adds_lambda_z2():
    q = quadratic(1.0)
    assert np.allclose(q.shift_quadratic(1.0)(Z), 2 * Z * Z, atol=0)
    f = double_well().as_piecewise()
    assert np.array_equal(f.shift_quadratic(0.0)(Z), f(Z))


def test_json_round_trip():
    f = double_well().as_piecewise()
    g = PiecewiseQuadratic.from_json(f.to_json())
    assert np.array_equal(f(Z), g(Z))
    assert f.to_json()[0]["lo"] == "-inf"


def test_conjugate_of_quadratic():
    # (z^2)* = p^2 / 4
    c = conjugate(quadratic(1.0))
    p = np.linspace(-4, 4, 9)
    assert np.allclose(c(p), p * p / 4, atol=1e-14)


def test_infimal_split_matches_grid_search():
    f1 = quadratic(1.0, -2.0, 1.0)          # (z - 1)^2
    f2 = quadratic(3.0, 0.0, 0.5)
    split = infimal_split(f1, 0.3, f2, 0.7)
    for z in (-1.0, 0.2, 1.7):
        x = np.linspace(-20, 20, 400001)
        y = (z - 0.3 * x) / 0.7
        brute = np.min(0.3 * f1(x) + 0.7 * f2(y))
        assert split(z) == pytest.approx(brute, abs=1e-7)


def test_common_tangent_of_two_parabolas():
    slope, x1, x2 = common_tangent((1.0, 2.0, 1.0), (1.0, -2.0, 1.0))
    assert (slope, x1, x2) == pytest.approx((0.0, -1.0, 1.0))
    assert common_tangent((1.0, -2.0, 1.0), (1.0, 2.0, 1.0)) is None


def test_lower_hull_drops_points_above_the_chord():
    x = np.array([0.0, 1.0, 2.0, 3.0])
    y = np.array([0.0, 2.0, -1.0, 0.0])
    assert list(lower_hull(x, y)) == [0, 2, 3]


def test_sampled_envelope_agrees_with_exact_envelope():
    f = double_well().as_piecewise()
    approx = sampled_convex_envelope(f, -3, 3, 2001)
    z = np.linspace(-2.5, 2.5, 51)
    assert np.max(np.abs(approx(z) - convex_envelope(f)(z))) < 1e-5


# curvatures are either exactly 0 or O(1): a curvature near 1e-12 puts tangent points ~1e6 away and is
# ill-conditioned in double precision
curvature = st.one_of(st.just(0.0), st.floats(0.05, 3.0))
pieces = st.lists(st.tuples(curvature, st.floats(-2.0, 2.0), st.floats(-1.0, 1.0)),
                  min_size=2, max_size=5)


@settings(max_examples=60, deadline=None)
@given(pieces)
def test_envelope_is_convex_and_below(coeffs):
    """Random continuous piecewise quadratics: the envelope is convex and lies below."""
    breaks = np.linspace(-1.5, 1.5, len(coeffs) - 1)
    spec, prev = [], None
    for i, (A, B, C) in enumerate(coeffs):
        lo = -INF if i == 0 else float(breaks[i - 1])
        hi = INF if i == len(coeffs) - 1 else float(breaks[i])
        if prev is not None:
            # glue continuously at lo
            C = prev(lo) - (A * lo + B) * lo
        spec.append((lo, hi, A, B, C))
        prev = lambda x, A=A, B=B, C=C: (A * x + B) * x + C
    f = from_pieces(spec)
    if any(p.A == 0 for p in f.pieces[:1] + f.pieces[-1:]):
        return   # envelope of an unbounded-below-growth edge is not the point here
    env = convex_envelope(f)
    z = np.linspace(-3, 3, 301)
    assert np.all(env(z) <= f(z) + 1e-9)
    assert env.is_convex(tol=1e-8)
