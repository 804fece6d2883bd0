"""Quadrature building blocks: exactness, weight handling, and break layout."""

import math

import numpy as np
import pytest

from vbessel._quad import (
    cluster_breaks,
    composite_legendre,
    graded_breaks,
    jacobi_rule,
    merge_breaks,
)


class TestJacobiRule:
    def test_polynomial_exactness_plain(self):
        # n-point Gauss rule integrates degree 2n-1 exactly.
        x, w = jacobi_rule(5, 0.0, 2.0)
        for deg in range(10):
            exact = 2.0 ** (deg + 1) / (deg + 1)
            assert abs(np.sum(w * x**deg) - exact) < 1e-12 * max(1.0, exact)

    def test_left_endpoint_weight(self):
        # Weight (x-lo)^p folded into the rule: integral of x^p over [0,1]
        # equals 1/(p+1) with f(x)=1.
        for p in (-0.5, -0.9, 0.7):
            x, w = jacobi_rule(8, 0.0, 1.0, left_exp=p)
            assert abs(np.sum(w) - 1.0 / (p + 1.0)) < 1e-12
            # And a polynomial factor on top stays exact.
            exact = 1.0 / (p + 2.0)
            assert abs(np.sum(w * x) - exact) < 1e-12

    def test_right_endpoint_weight(self):
        # Weight (hi-x)^q on [0,1]: integral of (1-x)^q is 1/(q+1).
        for q in (-0.5, 0.5):
            x, w = jacobi_rule(8, 0.0, 1.0, right_exp=q)
            assert abs(np.sum(w) - 1.0 / (q + 1.0)) < 1e-12

    def test_both_endpoint_weights(self):
        # Beta function: int_0^1 x^{-1/2}(1-x)^{-1/2} dx = pi.
        x, w = jacobi_rule(10, 0.0, 1.0, left_exp=-0.5, right_exp=-0.5)
        assert abs(np.sum(w) - math.pi) < 1e-12

    def test_interval_shift(self):
        # int_2^5 sqrt(x-2) dx = 2*3^{3/2}/3.
        x, w = jacobi_rule(10, 2.0, 5.0, left_exp=0.5)
        assert abs(np.sum(w) - 2.0 * 3.0**1.5 / 3.0) < 1e-12
        assert np.all(x > 2.0) and np.all(x < 5.0)


class TestCompositeLegendre:
    def test_smooth_integral(self):
        breaks = np.linspace(0.0, math.pi, 7)
        x, w = composite_legendre(breaks, 6)
        assert abs(np.sum(w * np.sin(x)) - 2.0) < 1e-12

    def test_node_count_and_ordering(self):
        breaks = np.array([0.0, 0.5, 2.0])
        x, w = composite_legendre(breaks, 4)
        assert x.shape == (8,) and w.shape == (8,)
        assert np.all(np.diff(x) > 0)
        assert np.all(w > 0)

    def test_total_weight_is_length(self):
        breaks = np.array([1.0, 1.3, 2.2, 4.0])
        _, w = composite_legendre(breaks, 5)
        assert abs(np.sum(w) - 3.0) < 1e-13


class TestBreakLayout:
    def test_graded_toward_lo(self):
        b = graded_breaks(0.0, 1.0, 8, 3.0)
        assert b[0] == 0.0 and b[-1] == 1.0
        steps = np.diff(b)
        # Graded toward the low end: panel widths increase.
        assert np.all(np.diff(steps) > 0)

    def test_graded_toward_hi(self):
        b = graded_breaks(0.0, 1.0, 8, 3.0, toward_lo=False)
        steps = np.diff(b)
        assert np.all(np.diff(steps) < 0)

    def test_cluster_rings(self):
        b = cluster_breaks(2.0, 0.1, inner=1.0, outer=8.0, rings=3)
        # Symmetric rings around the center at the given scale.
        assert np.any(np.isclose(b, 2.0 - 0.1)) and np.any(np.isclose(b, 2.0 + 0.1))
        assert np.any(np.isclose(b, 2.0 - 0.8)) and np.any(np.isclose(b, 2.0 + 0.8))

    def test_merge_clips_and_sorts(self):
        merged = merge_breaks(
            np.array([-1.0, 0.5, 3.0]),
            np.array([0.2, 0.5 + 1e-15, 1.8]),
            lo=0.0,
            hi=2.0,
        )
        assert merged[0] == 0.0 and merged[-1] == 2.0
        assert np.all(np.diff(merged) > 0)
        # Near-duplicates collapse; out-of-range points are dropped.
        assert np.sum(np.isclose(merged, 0.5)) == 1
        assert not np.any(merged > 2.0) and not np.any(merged < 0.0)

    def test_merge_integration_end_to_end(self):
        # int_0^4 x^{-1/2} e^{-x} dx = sqrt(pi) erf(2): the endpoint weight
        # goes into a Jacobi rule, the smooth remainder into graded panels.
        exact = math.sqrt(math.pi) * math.erf(2.0)
        xj, wj = jacobi_rule(10, 0.0, 0.5, left_exp=-0.5)
        breaks = merge_breaks(graded_breaks(0.5, 4.0, 8, 2.0), lo=0.5, hi=4.0)
        xs, ws = composite_legendre(breaks, 10)
        val = np.sum(wj * np.exp(-xj)) + np.sum(ws * np.exp(-xs) / np.sqrt(xs))
        assert abs(val - exact) < 1e-13
        # Graded panels alone only reach ~1e-3 against the same target,
        # which is why the split matters.
        breaks2 = merge_breaks(
            graded_breaks(0.0, 4.0, 12, 4.0),
            cluster_breaks(0.0, 0.05, 1.0, 8.0, 3),
            lo=0.0,
            hi=4.0,
        )
        x2, w2 = composite_legendre(breaks2, 10)
        val2 = np.sum(w2 * np.exp(-x2) / np.sqrt(x2))
        assert 1e-5 < abs(val2 - exact) < 5e-3
