"""Tests for statistics, variance estimators, critical values, and runs."""

import itertools
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

import gradtest.testing as testing_mod
from gradtest import (
    ConfigError,
    DegenerateGradient,
    DiscreteMeasure,
    CompositeFunctional,
    ProductSample,
    TestReport,
    TestSpec,
    TiedObservations,
    TooFewObservations,
    VonMisesFunctional,
    WilcoxonFunctional,
    as_generator,
    center,
    critical_value,
    gradient,
    kernel1_from_name,
    kernel2_from_name,
    load_sample_csv,
    load_sample_files,
    normal_quantile,
    one_sample_statistic,
    permutation_critical,
    rank_statistic,
    report_to_dict,
    run_test,
    sample,
    sigma1_exact,
    sigma1_plugin_product,
    sigma1_plugin_sum,
    t_statistic,
    u_variance_estimator,
    wilcoxon_tilde_statistic,
    wilcoxon_w_estimators,
)
from .conftest import draw_sample, make_discrete


class TestTStatistic:
    def test_zero_gradient_zero_statistic(self):
        gp = gradient(WilcoxonFunctional(),
                      DiscreteMeasure.point_mass(0.0),
                      DiscreteMeasure.point_mass(1.0))
        # degenerate gradient evaluates to zero at the sampled atoms
        assert t_statistic(gp, ProductSample([0.0], [1.0])) == 0.0

    def test_small_sample_by_hand(self):
        # T = sqrt(n) (mean k1(x) + mean k2(y))
        m = DiscreteMeasure.uniform_on([1.0, 2.0])
        gp = gradient(WilcoxonFunctional(), m, m)
        s = ProductSample([1.0, 2.0], [2.0, 2.0])
        # k1 values (-1/4, 1/4) mean 0; k2 values (1/4, -1/4) mean -1/4
        assert_allclose(t_statistic(gp, s), 2.0 * (0.0 - 0.25), rtol=1e-14)

    def test_equals_double_sum_form(self):
        # sqrt(n)/ (n1 n2) sum_ij [k1(x_i) + k2(y_j)] is the same number
        rng = np.random.Generator(np.random.Philox(key=2))
        p = make_discrete(rng)
        q = make_discrete(rng)
        gp = gradient(VonMisesFunctional(lambda x, y: np.minimum(x, y)), p, q)
        s = draw_sample(p, q, 3, 4, seed=9)
        k1 = gp.k1_tilde.values_at(s.x)
        k2 = gp.k2_tilde.values_at(s.y)
        double = math.sqrt(s.n) / (s.n1 * s.n2) * sum(
            k1[i] + k2[j] for i in range(s.n1) for j in range(s.n2))
        assert_allclose(t_statistic(gp, s), double, rtol=1e-12)


class TestSigma1Exact:
    def test_balanced_unit_norms(self):
        # ||k1|| = ||k2|| = 1 at d = 1/2: sigma1^2 = 2 + 2 = 4
        from gradtest import GradientPair

        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        k = center(m, lambda x: 2.0 * x)  # values -+1, norm 1
        gp = GradientPair(k, k, 0.5)
        assert_allclose(sigma1_exact(gp, 0.5), 2.0, rtol=1e-14)

    def test_matches_weighted_norm(self):
        from gradtest import DWeightedGradient

        rng = np.random.Generator(np.random.Philox(key=4))
        p = make_discrete(rng)
        q = make_discrete(rng)
        gp = gradient(WilcoxonFunctional(), p, q)
        for d in (0.2, 0.5, 0.8):
            dw = gp.d_weighted(d)
            assert_allclose(sigma1_exact(gp, d), dw.d_norm, rtol=1e-12)

    def test_invalid_allocation(self):
        m = DiscreteMeasure.uniform_on([1.0, 2.0])
        gp = gradient(WilcoxonFunctional(), m, m)
        for d in (0.0, 1.0, -0.3):
            with pytest.raises(ConfigError):
                sigma1_exact(gp, d)

    def test_degenerate_gradient_refused(self):
        gp = gradient(WilcoxonFunctional(),
                      DiscreteMeasure.point_mass(0.0),
                      DiscreteMeasure.point_mass(1.0))
        with pytest.raises(DegenerateGradient):
            sigma1_exact(gp, 0.5)


class TestCriticalValue:
    def test_median_level_is_zero(self):
        # alpha = 1/2 one-sided: the cutoff sits at the null median
        assert critical_value(0.5, "one", 1.0) == 0.0

    def test_standard_cutoffs(self):
        assert abs(critical_value(0.05, "one", 1.0) - 1.644854) < 1e-4
        assert abs(critical_value(0.05, "two", 1.0) - 1.959964) < 1e-4

    def test_scales_with_sigma(self):
        c1 = critical_value(0.05, "one", 1.0)
        assert_allclose(critical_value(0.05, "one", 2.5), 2.5 * c1, rtol=1e-13)

    def test_two_sided_equals_halved_one_sided(self):
        assert_allclose(critical_value(0.05, "two", 1.3),
                        critical_value(0.025, "one", 1.3), rtol=1e-13)


class TestPluginVariances:
    def test_constant_columns_give_zero(self):
        s = ProductSample([1.0, 1.0, 1.0], [2.0, 2.0])
        fid = kernel1_from_name("id")
        assert sigma1_plugin_sum(s, fid, fid) == 0.0

    def test_two_point_example(self):
        # x = (0, 2) under f1 = id has sample variance 2 (ddof 1); constant
        # second column contributes nothing; n / n1 = 2, n / n2 = 2
        s = ProductSample([0.0, 2.0], [5.0, 5.0])
        fid = kernel1_from_name("id")
        # sigma^2 = 2 * 2 + 2 * 0 = 4
        assert_allclose(sigma1_plugin_sum(s, fid, fid), 2.0, rtol=1e-14)

    def test_product_rule_weights(self):
        # delta method: factor means multiply the opposite variances
        rng = np.random.Generator(np.random.Philox(key=6))
        x = rng.uniform(1.0, 2.0, size=8)
        y = rng.uniform(1.0, 2.0, size=6)
        s = ProductSample(x, y)
        fid = kernel1_from_name("id")
        v1 = np.var(x, ddof=1)
        v2 = np.var(y, ddof=1)
        expected = math.sqrt(s.n / s.n1 * np.mean(y) ** 2 * v1
                             + s.n / s.n2 * np.mean(x) ** 2 * v2)
        assert_allclose(sigma1_plugin_product(s, fid, fid), expected,
                        rtol=1e-12)

    def test_consistency_for_sum(self):
        # plug-in converges to the exact sigma1 at the footpoint
        p = DiscreteMeasure([0.0, 1.0, 3.0], [0.5, 0.3, 0.2])
        q = DiscreteMeasure([-1.0, 2.0], [0.4, 0.6])
        fid = kernel1_from_name("id")
        fneg = kernel1_from_name("neg_id")
        k = CompositeFunctional("sum", fid, fneg)
        gp = gradient(k, p, q)
        s = draw_sample(p, q, 50_000, 50_000, seed=3)
        est = sigma1_plugin_sum(s, fid, fneg)
        exact = sigma1_exact(gp, 0.5)
        assert abs(est / exact - 1.0) < 0.02

    def test_too_few_observations(self):
        fid = kernel1_from_name("id")
        with pytest.raises(TooFewObservations):
            sigma1_plugin_sum(ProductSample([1.0], [1.0, 2.0]), fid, fid)
        with pytest.raises(TooFewObservations):
            sigma1_plugin_product(ProductSample([1.0, 2.0], [1.0]), fid, fid)


class TestUVarianceEstimator:
    def test_zero_kernel(self):
        s = ProductSample([1.0, 2.0], [3.0, 4.0])
        assert u_variance_estimator(lambda x, y: np.zeros(np.broadcast(x, y).shape), s) == 0.0

    def test_minimal_case_by_hand(self):
        # n1 = 1, n2 = 2: S = h(x1, y1) h(x1, y2)
        s = ProductSample([0.5], [1.0, 2.0])
        h = lambda x, y: x * y
        expected = (0.5 * 1.0) * (0.5 * 2.0)
        assert_allclose(u_variance_estimator(h, s), expected, rtol=1e-13)

    def test_unbiased_under_product_sampling(self):
        # exhaustive expectation over all (2 x 3) samples from two-atom
        # marginals equals int (int h dQ)^2 dP, for several kernels
        p = DiscreteMeasure([0.0, 1.0], [0.3, 0.7])
        q = DiscreteMeasure([0.5, 2.0], [0.6, 0.4])
        rng = np.random.Generator(np.random.Philox(key=8))
        for _ in range(3):
            grid = rng.normal(size=(2, 2))

            def h(x, y, grid=grid):
                xi = (np.asarray(x) > 0.5).astype(int)
                yi = (np.asarray(y) > 1.0).astype(int)
                return grid[xi, yi]

            target = float(np.dot(p.weights, (grid @ q.weights) ** 2))
            total = 0.0
            for xs in itertools.product(range(2), repeat=2):
                for ys in itertools.product(range(2), repeat=3):
                    prob = (np.prod(p.weights[list(xs)])
                            * np.prod(q.weights[list(ys)]))
                    s = ProductSample(p.locations[list(xs)] + 1e-9 * np.arange(2),
                                      q.locations[list(ys)] + 1e-9 * np.arange(3))
                    total += prob * u_variance_estimator(h, s)
            assert_allclose(total, target, rtol=1e-10)

    def test_needs_two_second_sample_points(self):
        with pytest.raises(TooFewObservations):
            u_variance_estimator(lambda x, y: x * y,
                                 ProductSample([1.0, 2.0], [3.0]))


class TestWilcoxonWEstimators:
    def test_separated_samples_hit_quarter(self):
        # every x above every y: the indicator column is constant 1, and
        # the estimator returns the extreme value 1/4 by construction
        s = ProductSample([10.0, 11.0, 12.0], [0.0, 1.0, 2.0])
        w1, w2 = wilcoxon_w_estimators(s)
        assert_allclose(w1, 0.25, rtol=1e-13)
        assert_allclose(w2, 0.25, rtol=1e-13)

    def test_continuous_null_near_one_twelfth(self):
        rng = as_generator(11)
        s = ProductSample(rng.uniform(size=5000), rng.uniform(size=5000))
        w1, w2 = wilcoxon_w_estimators(s)
        assert abs(w1 / (1.0 / 12.0) - 1.0) < 0.1
        assert abs(w2 / (1.0 / 12.0) - 1.0) < 0.1

    def test_matches_direct_count_formula(self):
        # recompute from raw pair counts with plain loops
        rng = as_generator(13)
        x = rng.normal(size=9)
        y = rng.normal(size=7)
        s = ProductSample(x, y)
        n1, n2 = 9, 7
        cnt_x = np.array([(np.sort(y) <= xi).sum() for xi in x], dtype=float)
        w1_direct = ((np.sum((cnt_x - n2 / 2.0) ** 2) - n1 * n2 / 4.0)
                     / (n1 * n2 * (n2 - 1)))
        w1, _ = wilcoxon_w_estimators(s)
        assert_allclose(w1, w1_direct, rtol=1e-12)

    def test_needs_two_per_sample(self):
        with pytest.raises(TooFewObservations):
            wilcoxon_w_estimators(ProductSample([1.0], [2.0, 3.0]))


class TestTildeStatistic:
    def test_extreme_orders(self):
        # all y strictly above x: U = 0, T = -sqrt(n)/2; reversed: +sqrt(n)/2
        low = ProductSample([0.0, 1.0], [2.0, 3.0])
        high = ProductSample([2.0, 3.0], [0.0, 1.0])
        assert_allclose(wilcoxon_tilde_statistic(low), -1.0, rtol=1e-14)
        assert_allclose(wilcoxon_tilde_statistic(high), 1.0, rtol=1e-14)

    def test_interleaved_count(self):
        # pairs with x >= y: (2,1), (4,1), (4,3): U = 3/4
        s = ProductSample([2.0, 4.0], [1.0, 3.0])
        assert_allclose(wilcoxon_tilde_statistic(s), 2.0 * (0.75 - 0.5),
                        rtol=1e-14)


class TestRankStatistic:
    def test_single_pair(self):
        # x = (1), y = (2): ranks 1 and 2, T = (1 - 2) / sqrt(2)
        s = ProductSample([1.0], [2.0])
        assert_allclose(rank_statistic(s), -1.0 / math.sqrt(2.0), rtol=1e-14)

    def test_one_against_two(self):
        # x = (3), y = (1, 2): T = 3/sqrt(3) - (1+2)/(2 sqrt(3)) = sqrt(3)/2
        s = ProductSample([3.0], [1.0, 2.0])
        assert_allclose(rank_statistic(s), math.sqrt(3.0) / 2.0, rtol=1e-14)

    def test_ties_rejected(self):
        with pytest.raises(TiedObservations):
            rank_statistic(ProductSample([1.0, 2.0], [2.0, 3.0]))

    def test_antisymmetric_under_swap(self):
        rng = as_generator(17)
        x = rng.normal(size=6)
        y = rng.normal(size=4)
        a = rank_statistic(ProductSample(x, y))
        b = rank_statistic(ProductSample(y, x))
        # swapping the samples flips the comparison of mean ranks
        assert a * b < 0


class TestPermutationCritical:
    def test_single_pair_median_level(self):
        # n1 = n2 = 1 at alpha = 1/2: the two equally likely orderings give
        # rejection probability exactly 1/2 with gamma = 0
        s = ProductSample([1.0], [2.0])
        c, gamma = permutation_critical(s, 0.5, 1000)
        assert_allclose(c, -1.0 / math.sqrt(2.0), rtol=1e-14)
        assert gamma == 0.0

    def test_exhaustive_matches_enumeration(self):
        # recompute the distribution over all C(5, 2) rank splits by hand
        s = ProductSample([0.3, 0.9], [0.1, 0.5, 0.7])
        alpha = 0.2
        c, gamma = permutation_critical(s, alpha, 1000)
        n1, n2 = 2, 3
        n = 5
        scale = (1.0 / n1 + 1.0 / n2) / math.sqrt(n)
        offset = n * (n + 1) / (2.0 * n2 * math.sqrt(n))
        values = sorted(set(scale * sum(c_) - offset
                            for c_ in itertools.combinations(range(1, 6), 2)))
        weights = {}
        for combo in itertools.combinations(range(1, 6), 2):
            v = scale * sum(combo) - offset
            weights[round(v, 12)] = weights.get(round(v, 12), 0.0) + 0.1
        # survival function just above c must not exceed alpha, and the
        # randomized boundary term restores it exactly
        surv = sum(w for v, w in weights.items() if v > c + 1e-12)
        at = sum(w for v, w in weights.items() if abs(v - c) <= 1e-12)
        assert surv <= alpha + 1e-12
        assert_allclose(surv + gamma * at, alpha, atol=1e-12)

    def test_randomized_level_is_exact_for_small_designs(self):
        for n1, n2 in ((2, 2), (2, 3), (3, 3), (4, 3)):
            rng = as_generator(19 + n1 * 10 + n2)
            s = ProductSample(rng.normal(size=n1), rng.normal(size=n2))
            for alpha in (0.05, 0.1, 0.25):
                c, gamma = permutation_critical(s, alpha, 1000)
                n = n1 + n2
                scale = (1.0 / n1 + 1.0 / n2) / math.sqrt(n)
                offset = n * (n + 1) / (2.0 * n2 * math.sqrt(n))
                level = 0.0
                combos = list(itertools.combinations(range(1, n + 1), n1))
                for combo in combos:
                    v = scale * sum(combo) - offset
                    if v > c + 1e-12:
                        level += 1.0
                    elif abs(v - c) <= 1e-12:
                        level += gamma
                level /= len(combos)
                assert_allclose(level, alpha, atol=1e-12)

    def test_sampled_path_close_to_exhaustive(self, monkeypatch):
        rng = as_generator(23)
        s = ProductSample(rng.normal(size=5), rng.normal(size=5))
        c_exact, gamma_exact = permutation_critical(s, 0.1, 1000)
        monkeypatch.setattr(testing_mod, "_EXHAUSTIVE_LIMIT", 10)
        c_samp, gamma_samp = permutation_critical(s, 0.1, 20_000,
                                                  rng=as_generator(29))
        # the sampled cutoff lands on the same lattice point or an adjacent
        # one; the achieved level stays within Monte Carlo tolerance
        assert abs(c_samp - c_exact) <= (1.0 / 5.0 + 1.0 / 5.0) / math.sqrt(10.0) * 3 + 1e-12
        n = 10
        scale = (1.0 / 5.0 + 1.0 / 5.0) / math.sqrt(n)
        offset = n * (n + 1) / (2.0 * 5.0 * math.sqrt(n))
        level = 0.0
        combos = list(itertools.combinations(range(1, 11), 5))
        for combo in combos:
            v = scale * sum(combo) - offset
            if v > c_samp + 1e-12:
                level += 1.0
            elif abs(v - c_samp) <= 1e-12:
                level += gamma_samp
        level /= len(combos)
        assert abs(level - 0.1) < 0.02

    def test_small_replication_count_rejected(self, monkeypatch):
        # the floor applies on the sampled path; enumeration ignores B
        monkeypatch.setattr(testing_mod, "_EXHAUSTIVE_LIMIT", 0)
        s = ProductSample([1.0], [2.0])
        with pytest.raises(ConfigError):
            permutation_critical(s, 0.05, 10)


class TestOneSample:
    def test_zero_tangent(self):
        m = DiscreteMeasure.uniform_on([0.0, 1.0])
        from gradtest import Tangent

        assert one_sample_statistic(Tangent.zero(m), [0.0, 1.0]) == 0.0

    def test_four_ones(self):
        # k values all 1 at the observed atoms: T = 4 / sqrt(4) = 2
        m = DiscreteMeasure([0.0, 1.0], [0.5, 0.5])
        k = center(m, lambda x: 2.0 * x)  # values (-1, +1)
        assert_allclose(one_sample_statistic(k, [1.0, 1.0, 1.0, 1.0]), 2.0,
                        rtol=1e-14)

    def test_null_level(self):
        # under sampling from the base the rejection rate matches alpha
        m = DiscreteMeasure([0.0, 1.0, 2.0], [0.5, 0.3, 0.2])
        k = center(m, lambda x: x)
        norm = k.l2_norm
        u = normal_quantile(0.95)
        gen = as_generator(31)
        n, reps = 500, 4000
        draws = sample(m, gen, n * reps).reshape(reps, n)
        vals = k.values_at(draws).sum(axis=1) / math.sqrt(n)
        rate = float(np.mean(vals > u * norm))
        assert abs(rate - 0.05) < 0.015


class TestSpecValidation:
    def test_rejects_bad_fields(self):
        k = WilcoxonFunctional()
        with pytest.raises(ConfigError):
            TestSpec(k, 0.5, "three", 0.05, "exact")
        with pytest.raises(ConfigError):
            TestSpec(k, 0.5, "one", 0.0, "exact")
        with pytest.raises(ConfigError):
            TestSpec(k, 0.5, "one", 0.05, "bootstrap")
        with pytest.raises(ConfigError):
            TestSpec(k, float("nan"), "one", 0.05, "exact")
        with pytest.raises(ConfigError):
            TestSpec(k, 0.5, "one", 0.05, "permutation", permutation_reps=50)


class TestRunTest:
    def _footpoint(self):
        p = DiscreteMeasure([0.0, 1.0, 2.0], [0.3, 0.4, 0.3])
        q = DiscreteMeasure([0.5, 1.5, 2.5], [0.4, 0.4, 0.2])
        return p, q

    def test_exact_source_report_fields(self):
        p, q = self._footpoint()
        k = WilcoxonFunctional()
        spec = TestSpec(k, 0.5, "one", 0.05, "exact")
        s = draw_sample(p, q, 40, 40, seed=5)
        report = run_test(spec, s, footpoint=(p, q, 0.5))
        assert isinstance(report, TestReport)
        assert report.provenance == "exact"
        assert report.sigma1_estimate is not None
        assert report.critical_value > 0.0
        assert report.reject == (report.statistic > report.critical_value)

    def test_exact_source_centers_at_null_value(self):
        # the statistic is T_n + sqrt(n) (k0 - a): moving the null value
        # shifts it deterministically
        p, q = self._footpoint()
        k = WilcoxonFunctional()
        s = draw_sample(p, q, 30, 30, seed=7)
        r0 = run_test(TestSpec(k, 0.5, "one", 0.05, "exact"), s,
                      footpoint=(p, q, 0.5))
        r1 = run_test(TestSpec(k, 0.4, "one", 0.05, "exact"), s,
                      footpoint=(p, q, 0.5))
        from gradtest import evaluate

        shift = math.sqrt(s.n) * ((evaluate(k, p, q) - 0.4)
                                  - (evaluate(k, p, q) - 0.5))
        assert_allclose(r1.statistic - r0.statistic, shift, rtol=1e-12)

    def test_exact_requires_footpoint(self):
        k = WilcoxonFunctional()
        spec = TestSpec(k, 0.5, "one", 0.05, "exact")
        s = ProductSample([1.0, 2.0], [0.5, 1.5])
        with pytest.raises(ConfigError):
            run_test(spec, s)

    def test_plugin_sum_is_welch_like(self):
        # mean-difference functional with plug-in variances reproduces the
        # unpooled normal two-sample statistic
        fid = kernel1_from_name("id")
        fneg = kernel1_from_name("neg_id")
        k = CompositeFunctional("sum", fid, fneg)
        rng = as_generator(37)
        x = rng.normal(size=12)
        y = rng.normal(size=9)
        s = ProductSample(x, y)
        spec = TestSpec(k, 0.0, "two", 0.05, "plugin_sum")
        report = run_test(spec, s)
        assert_allclose(report.statistic,
                        math.sqrt(s.n) * (np.mean(x) - np.mean(y)), rtol=1e-12)
        expected_sigma = math.sqrt(s.n / s.n1 * np.var(x, ddof=1)
                                   + s.n / s.n2 * np.var(y, ddof=1))
        assert_allclose(report.sigma1_estimate, expected_sigma, rtol=1e-12)

    def test_plugin_product_statistic(self):
        fid = kernel1_from_name("id")
        k = CompositeFunctional("product", fid, fid)
        rng = as_generator(41)
        x = rng.uniform(1.0, 2.0, size=10)
        y = rng.uniform(1.0, 2.0, size=10)
        s = ProductSample(x, y)
        report = run_test(TestSpec(k, 2.0, "two", 0.05, "plugin_product"), s)
        assert_allclose(report.statistic,
                        math.sqrt(20) * (np.mean(x) * np.mean(y) - 2.0),
                        rtol=1e-12)

    def test_plugin_source_needs_matching_functional(self):
        spec = TestSpec(WilcoxonFunctional(), 0.5, "one", 0.05, "plugin_sum")
        s = ProductSample([1.0, 2.0], [0.5, 1.5])
        with pytest.raises(ConfigError):
            run_test(spec, s)

    def test_ustat_source_matches_tilde(self):
        k = WilcoxonFunctional()
        rng = as_generator(43)
        s = ProductSample(rng.normal(size=15), rng.normal(size=12))
        report = run_test(TestSpec(k, 0.5, "one", 0.05, "ustat_w"), s)
        # reconstruct: statistic = sqrt(n) (U_n - a) from raw pair counts
        cnt = sum((xi >= s.y).sum() for xi in s.x)
        u_direct = cnt / (s.n1 * s.n2)
        assert_allclose(report.statistic, math.sqrt(s.n) * (u_direct - 0.5),
                        rtol=1e-12)
        assert report.provenance == "ustat_w"

    def test_permutation_source_report(self):
        k = WilcoxonFunctional()
        rng = as_generator(47)
        s = ProductSample(rng.normal(size=8), rng.normal(size=8))
        spec = TestSpec(k, 0.5, "one", 0.05, "permutation",
                        permutation_reps=2000)
        r1 = run_test(spec, s, rng=3)
        r2 = run_test(spec, s, rng=3)
        assert r1.reject == r2.reject
        assert r1.sigma1_estimate is None
        assert_allclose(r1.statistic, rank_statistic(s), rtol=1e-13)

    def test_two_sided_wider_than_one_sided(self):
        p, q = self._footpoint()
        k = WilcoxonFunctional()
        s = draw_sample(p, q, 25, 25, seed=11)
        r_one = run_test(TestSpec(k, 0.5, "one", 0.05, "exact"), s,
                         footpoint=(p, q, 0.5))
        r_two = run_test(TestSpec(k, 0.5, "two", 0.05, "exact"), s,
                         footpoint=(p, q, 0.5))
        assert r_two.critical_value > r_one.critical_value

    def test_report_dict_shape(self):
        p, q = self._footpoint()
        k = WilcoxonFunctional()
        s = draw_sample(p, q, 20, 20, seed=13)
        report = run_test(TestSpec(k, 0.5, "one", 0.05, "exact"), s,
                          footpoint=(p, q, 0.5))
        obj = report_to_dict(report)
        assert set(obj) == {"statistic", "critical_value", "gamma", "reject",
                            "sigma1", "source"}
        assert obj["source"] == "exact"


class TestSampleLoading:
    def test_two_column_csv(self, tmp_path):
        path = tmp_path / "both.csv"
        path.write_text("sample_id,value\n1,0.5\n2,1.5\n1,0.25\n2,2.5\n")
        s = load_sample_csv(str(path))
        assert s.n1 == 2 and s.n2 == 2
        assert_allclose(np.sort(s.x), [0.25, 0.5])

    def test_headerless_two_column(self, tmp_path):
        path = tmp_path / "plain.csv"
        path.write_text("1,0.5\n2,1.5\n")
        s = load_sample_csv(str(path))
        assert s.n1 == 1 and s.n2 == 1

    def test_invalid_sample_id(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("sample_id,value\n3,0.5\n2,1.5\n")
        with pytest.raises(ConfigError):
            load_sample_csv(str(path))

    def test_non_numeric_value(self, tmp_path):
        path = tmp_path / "bad2.csv"
        path.write_text("sample_id,value\n1,abc\n2,1.5\n")
        with pytest.raises(ConfigError):
            load_sample_csv(str(path))

    def test_single_column_files(self, tmp_path):
        xp = tmp_path / "x.csv"
        yp = tmp_path / "y.csv"
        xp.write_text("value\n0.1\n0.2\n0.3\n")
        yp.write_text("0.5\n0.6\n")
        s = load_sample_files(str(xp), str(yp))
        assert s.n1 == 3 and s.n2 == 2
        assert_allclose(s.y, [0.5, 0.6])
