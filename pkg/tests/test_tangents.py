"""Tests for tangent directions, local curves, and the LAN calculus."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from gradtest import (
    BaseMismatch,
    DegenerateDensity,
    DiscreteMeasure,
    InvalidTangent,
    PiecewiseUniformMeasure,
    ProductSample,
    ProductTangent,
    Tangent,
    ValueOutsideSupport,
    as_generator,
    center,
    central_sequence,
    curve_measure,
    d_inner,
    integrate,
    l2_derivative_residual,
    lan_remainder,
    sample,
    tv_distance,
)
from .conftest import make_discrete, make_product_tangent, make_tangent


class TestCenter:
    def test_constant_maps_to_zero(self):
        # centering removes the mean, so a constant becomes the zero tangent
        m = DiscreteMeasure.uniform_on([1.0, 2.0, 3.0])
        g = center(m, lambda x: np.full_like(x, 5.0))
        assert_array_equal(g.values, [0.0, 0.0, 0.0])

    def test_identity_on_two_points(self):
        # uniform{0, 1}, raw g(x) = x: mean 1/2, centered values -+1/2
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = center(m, lambda x: x)
        assert_allclose(g.values, [-0.5, 0.5], rtol=1e-15)

    def test_idempotent(self):
        rng = np.random.Generator(np.random.Philox(key=1))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        again = center(m, g.values)
        assert_allclose(again.values, g.values, rtol=0, atol=1e-15)

    def test_mean_zero_to_machine_precision(self):
        rng = np.random.Generator(np.random.Philox(key=2))
        for _ in range(10):
            m = make_discrete(rng)
            g = center(m, rng.normal(size=m.locations.size) * 1e3)
            assert abs(float(np.dot(m.weights, g.values))) < 1e-12

    def test_continuous_base(self):
        m = PiecewiseUniformMeasure([0.0, 1.0, 2.0], [0.5, 0.5])
        g = center(m, [1.0, 3.0])
        # mean is 2.0, so the centered segment values are -1 and 1
        assert_allclose(g.values, [-1.0, 1.0], rtol=1e-15)

    def test_raw_callable_on_continuous_base_uses_segments(self):
        m = PiecewiseUniformMeasure([0.0, 2.0], [1.0])
        g = center(m, [4.0])
        assert_array_equal(g.values, [0.0])


class TestTangentType:
    def test_validates_alignment(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        with pytest.raises(InvalidTangent):
            Tangent(m, [1.0, -1.0, 0.0])  # three values, two atoms
        with pytest.raises(InvalidTangent):
            Tangent(m, [np.nan, 0.0])

    def test_l2_norm(self):
        m = DiscreteMeasure([0.0, 1.0], [0.25, 0.75])
        g = Tangent(m, [3.0, -1.0])
        # ||g||^2 = 0.25 * 9 + 0.75 * 1 = 3
        assert_allclose(g.l2_norm, np.sqrt(3.0), rtol=1e-15)

    def test_values_at_atoms(self):
        m = DiscreteMeasure([0.0, 2.0], [0.5, 0.5])
        g = Tangent(m, [-1.0, 1.0])
        assert_array_equal(g.values_at([2.0, 0.0, 2.0]), [1.0, -1.0, 1.0])

    def test_values_at_continuous_points(self):
        m = PiecewiseUniformMeasure([0.0, 1.0, 2.0], [0.5, 0.5])
        g = Tangent(m, [-1.0, 1.0])
        assert_array_equal(g.values_at([0.25, 1.75]), [-1.0, 1.0])

    def test_values_outside_support_raise(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])
        with pytest.raises(ValueOutsideSupport):
            g.values_at([0.5])

    def test_zero_and_scaled(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        assert Tangent.zero(m).l2_norm == 0.0
        g = Tangent(m, [-1.0, 1.0])
        assert_allclose(g.scaled(2.5).values, [-2.5, 2.5])

    def test_inner_product(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0, 2.0])
        g = Tangent(m, [-1.0, 0.0, 1.0])
        h = Tangent(m, [1.0, -2.0, 1.0])
        assert_allclose(g.inner(g), 2.0 / 3.0, rtol=1e-15)
        assert_allclose(g.inner(h), 0.0, atol=1e-15)


class TestCurveMeasure:
    def test_zero_parameter_returns_base_weights(self):
        m = DiscreteMeasure([0.0, 1.0], [0.3, 0.7])
        g = Tangent(m, [-7.0, 3.0])  # mean 0 under (0.3, 0.7)
        out = curve_measure(m, g, 0.0)
        assert_array_equal(out.weights, m.weights)

    def test_two_point_unit_step(self):
        # uniform{0, 1}, g = (-1, +1), t = 1:
        # density (1 + g/2)^2 / c with c = 1 + 1/4, weights (0.1, 0.9)
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])
        out = curve_measure(m, g, 1.0)
        assert_allclose(out.weights, [0.1, 0.9], rtol=1e-14)

    def test_normalizer_formula(self):
        # c(t g) = 1 + t^2 ||g||^2 / 4, checked via the weight of one atom
        m = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
        g = Tangent(m, [-1.0, 1.0])  # ||g|| = 1
        t = 1.5
        out = curve_measure(m, g, t)
        c = 1.0 + t * t / 4.0
        expected = 0.5 * (1.0 + 0.5 * t * np.array([-1.0, 1.0])) ** 2 / c
        assert_allclose(out.weights, expected, rtol=1e-14)

    def test_vanishing_atom_is_dropped(self):
        # 1 + t g / 2 = 0 at the first atom: its mass hits exactly zero
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-2.0, 2.0])
        out = curve_measure(m, g, 1.0)
        assert out.locations.size == 1
        assert out.locations[0] == 1.0
        assert out.weights[0] == 1.0

    def test_continuous_curve(self):
        m = PiecewiseUniformMeasure([0.0, 0.5, 1.0], [0.5, 0.5])
        g = center(m, [-1.0, 1.0])
        out = curve_measure(m, g, 1.0)
        # same two-segment arithmetic as the discrete unit step
        assert_allclose(out.segment_masses, [0.1, 0.9], rtol=1e-14)

    def test_negation_symmetry(self):
        # moving backwards along g equals moving forwards along -g
        rng = np.random.Generator(np.random.Philox(key=7))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        a = curve_measure(m, g, -0.3)
        b = curve_measure(m, g.scaled(-1.0), 0.3)
        assert_allclose(a.weights, b.weights, rtol=1e-14)

    @given(st.floats(-3.0, 3.0), st.integers(0, 2 ** 32 - 1))
    @settings(max_examples=50, deadline=None)
    def test_total_mass_is_one(self, t, seed):
        rng = np.random.Generator(np.random.Philox(key=seed))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        out = curve_measure(m, g, t)
        assert_allclose(float(np.sum(out.weights)), 1.0, rtol=1e-12)

    def test_base_mismatch_rejected(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        other = DiscreteMeasure.uniform_on([0.0, 2.0])
        g = Tangent(other, [-1.0, 1.0])
        with pytest.raises(BaseMismatch):
            curve_measure(m, g, 0.5)


class TestDerivativeResidual:
    def test_zero_tangent_zero_residual(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        assert l2_derivative_residual(m, Tangent.zero(m), 0.5) == 0.0

    def test_residual_shrinks_superlinearly(self):
        # the L2 differentiability residual is o(t): one decade in t buys
        # more than a factor five
        rng = np.random.Generator(np.random.Philox(key=3))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        r_coarse = l2_derivative_residual(m, g, 1e-1)
        r_fine = l2_derivative_residual(m, g, 1e-2)
        assert r_fine < 0.2 * r_coarse

    def test_residual_tiny_at_tiny_t(self):
        rng = np.random.Generator(np.random.Philox(key=4))
        for _ in range(5):
            m = make_discrete(rng)
            g = make_tangent(rng, m, scale=3.0)
            assert g.l2_norm <= 10.0
            assert l2_derivative_residual(m, g, 1e-6) < 1e-5

    def test_log_log_slope_at_least_linear(self):
        rng = np.random.Generator(np.random.Philox(key=6))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        ts = np.array([1e-1, 1e-2, 1e-3, 1e-4])
        rs = np.array([l2_derivative_residual(m, g, t) for t in ts])
        slope = np.polyfit(np.log(ts), np.log(rs), 1)[0]
        assert slope >= 0.9

    def test_curve_stays_tv_close(self):
        # the curve converges to the base in total variation as t -> 0
        rng = np.random.Generator(np.random.Philox(key=8))
        m = make_discrete(rng)
        g = make_tangent(rng, m)
        d1 = tv_distance(curve_measure(m, g, 0.1), m)
        d2 = tv_distance(curve_measure(m, g, 0.01), m)
        assert d2 < d1
        assert d2 < 0.01 * g.l2_norm


class TestCentralSequence:
    def test_zero_tangent(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        pt = ProductTangent.zero(m, m)
        s = ProductSample([0.0, 1.0], [1.0])
        assert central_sequence(pt, s) == 0.0

    def test_single_pair_formula(self):
        # n1 = n2 = 1: X_n = (g1(x) + g2(y)) / sqrt(2)
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])
        pt = ProductTangent(g, g.scaled(2.0))
        s = ProductSample([1.0], [0.0])
        assert_allclose(central_sequence(pt, s), (1.0 - 2.0) / np.sqrt(2.0),
                        rtol=1e-15)

    def test_moments_match_theory(self):
        # under the null, E X_n = 0 and
        # Var X_n = (1 - d) ||g1||^2 + d ||g2||^2 exactly for each n
        m = DiscreteMeasure([0.0, 1.0, 3.0], [0.5, 0.3, 0.2])
        g1 = center(m, lambda x: x)
        g2 = center(m, lambda x: x * x)
        pt = ProductTangent(g1, g2)
        gen = as_generator(12)
        reps = 100_000
        x = sample(m, gen, reps)
        y = sample(m, gen, reps)
        # one observation per margin, so X_n = (g1(x) + g2(y)) / sqrt(2)
        vals = (g1.values_at(x) + g2.values_at(y)) / np.sqrt(2.0)
        target = 0.5 * g1.l2_norm ** 2 + 0.5 * g2.l2_norm ** 2
        assert abs(np.mean(vals)) < 4.0 * np.sqrt(target / reps)
        assert abs(np.var(vals) / target - 1.0) < 0.03


class TestLanRemainder:
    def test_zero_local_parameter_is_exactly_zero(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        pt = ProductTangent(Tangent(m, [-1.0, 1.0]), Tangent(m, [1.0, -1.0]))
        s = ProductSample([0.0, 1.0], [1.0, 0.0])
        assert lan_remainder(m, m, pt, 0.0, s) == 0.0

    def test_zero_tangent_is_exactly_zero(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        pt = ProductTangent.zero(m, m)
        s = ProductSample([0.0, 1.0], [1.0, 0.0])
        assert lan_remainder(m, m, pt, 1.7, s) == 0.0

    def test_single_observation_by_hand(self):
        # n = 2, theta = 1, t = 1 / sqrt(2); remainder assembled by hand
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])
        pt = ProductTangent(g, g)
        s = ProductSample([1.0], [0.0])
        t = 1.0 / np.sqrt(2.0)
        c = 1.0 + t * t / 4.0
        log_lr = (2.0 * np.log(1.0 + 0.5 * t) - np.log(c)
                  + 2.0 * np.log(1.0 - 0.5 * t) - np.log(c))
        x_n = (1.0 - 1.0) / np.sqrt(2.0)
        expected = log_lr - 1.0 * x_n + 0.5 * 1.0 * 1.0
        assert_allclose(lan_remainder(m, m, pt, 1.0, s), expected, rtol=1e-13)

    def test_degenerate_density_detected(self):
        # theta / sqrt(n) = 2 makes 1 + t g / 2 vanish at the sampled atom
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])
        pt = ProductTangent(g, g)
        s = ProductSample([0.0], [1.0])
        with pytest.raises(DegenerateDensity):
            lan_remainder(m, m, pt, 2.0 * np.sqrt(2.0), s)

    def test_base_mismatch(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        other = DiscreteMeasure.uniform_on([0.0, 2.0])
        pt = ProductTangent(Tangent(other, [-1.0, 1.0]), Tangent(other, [1.0, -1.0]))
        s = ProductSample([0.0], [1.0])
        with pytest.raises(BaseMismatch):
            lan_remainder(m, m, pt, 1.0, s)

    def test_shrinks_with_n(self):
        # the remainder is o_P(1): its typical size drops along n
        rng = np.random.Generator(np.random.Philox(key=21))
        m = DiscreteMeasure([0.0, 1.0, 2.0], [0.5, 0.3, 0.2])
        g1 = center(m, lambda x: x)
        g2 = center(m, lambda x: -x)
        pt = ProductTangent(g1, g2)
        meds = []
        for n in (50, 800):
            half = n // 2
            vals = []
            for _ in range(300):
                s = ProductSample(sample(m, rng, half), sample(m, rng, half))
                vals.append(abs(lan_remainder(m, m, pt, 1.0, s)))
            meds.append(np.median(vals))
        assert meds[1] < meds[0]


class TestDInner:
    def test_zero(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        pt = ProductTangent.zero(m, m)
        assert d_inner(pt, pt, 0.5) == 0.0

    def test_balanced_identical_components(self):
        # d = 1/2, g1 = g2 with ||g1||^2 = 2: inner product is 2
        m = DiscreteMeasure.uniform_on([1.0, 2.0])
        g = center(m, lambda x: 2.0 * x)  # values -+1, norm^2 = 1
        g = g.scaled(np.sqrt(2.0))  # norm^2 = 2
        pt = ProductTangent(g, g)
        assert_allclose(d_inner(pt, pt, 0.5), 2.0, rtol=1e-14)

    def test_allocation_weighting(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        g = Tangent(m, [-1.0, 1.0])  # norm^2 = 1
        a = ProductTangent(g, Tangent.zero(m))
        b = ProductTangent(Tangent.zero(m), g)
        assert_allclose(d_inner(a, a, 0.3), 0.7, rtol=1e-14)
        assert_allclose(d_inner(b, b, 0.3), 0.3, rtol=1e-14)

    def test_bilinear(self):
        rng = np.random.Generator(np.random.Philox(key=31))
        p = make_discrete(rng)
        q = make_discrete(rng)
        a = make_product_tangent(rng, p, q)
        b = make_product_tangent(rng, p, q)
        c = make_product_tangent(rng, p, q)
        lhs = d_inner(ProductTangent(center(p, a.g1.values + b.g1.values),
                                     center(q, a.g2.values + b.g2.values)),
                      c, 0.4)
        rhs = d_inner(a, c, 0.4) + d_inner(b, c, 0.4)
        assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-12)

    def test_base_mismatch(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        other = DiscreteMeasure.uniform_on([0.0, 2.0])
        a = ProductTangent(Tangent(m, [-1.0, 1.0]), Tangent(m, [1.0, -1.0]))
        b = ProductTangent(Tangent(other, [-1.0, 1.0]), Tangent(other, [1.0, -1.0]))
        with pytest.raises(BaseMismatch):
            d_inner(a, b, 0.5)
