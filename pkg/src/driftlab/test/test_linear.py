import math
import os
import tempfile
import unittest

import numpy as np
from hypothesis import given, settings, strategies as st
from openmdao.utils.assert_utils import assert_near_equal

from driftlab.errors import ConfigurationError
from driftlab.linear import (DROSTE, HEYAO, IDENTITY, ONEMAX, WEIGHTED, LinearFunction, Potential,
                             bit_zero_ordering_check, bound_catalog, binval, enumerate_level_probabilities,
                             eval_linear, eval_potential, exact_onemax_runtime, exact_onemax_times,
                             exact_pointwise_drift, exhaustive_drift_table, heyao_additive_drift,
                             is_asymptotic, level_monotonicity_check, level_probability,
                             level_probability_row, level_probability_table, make_function, onemax,
                             onemax_drift_check, random_linear, weighted_drift_check)
from driftlab.seeding import make_rng

E = math.e


class LinearFunctionTestCase(unittest.TestCase):

    def test_eval_linear(self):
        self.assertEqual(eval_linear(onemax(4), [1, 0, 1, 1]), 3)
        self.assertEqual(eval_linear(binval(3), [1, 0, 1]), 5)
        for f in (onemax(6), binval(6), random_linear(6, make_rng(1))):
            self.assertEqual(eval_linear(f, [0] * 6), 0)

    def test_length_mismatch(self):
        with self.assertRaises(ConfigurationError):
            eval_linear(onemax(4), [1, 0])

    def test_weights_normalized(self):
        f = LinearFunction([3.0, 1.0, 2.0])
        self.assertEqual(f.weights.tolist(), [1.0, 2.0, 3.0])
        with self.assertRaises(ConfigurationError):
            LinearFunction([1.0, 0.0])
        with self.assertRaises(ConfigurationError):
            LinearFunction([])

    def test_random_linear(self):
        f = random_linear(50, make_rng(3))
        self.assertTrue(np.all(f.weights > 0))
        self.assertTrue(np.all(np.diff(f.weights) >= 0))
        self.assertTrue(np.all(f.weights <= 1.0))
        g = random_linear(50, make_rng(3))
        self.assertEqual(f.weights.tolist(), g.weights.tolist())

    def test_largest_weight_mean(self):
        rng = make_rng(10)
        draws = 20000
        top = np.array([random_linear(10, rng).weights[-1] for _ in range(draws)])
        se = top.std(ddof=1) / math.sqrt(draws)
        self.assertLess(abs(top.mean() - 10.0 / 11.0), 4 * se)

    def test_make_function(self):
        self.assertEqual(make_function("onemax", 5).weights.tolist(), [1.0] * 5)
        self.assertEqual(make_function("binval", 3).weights.tolist(), [1.0, 2.0, 4.0])
        with self.assertRaises(ConfigurationError):
            make_function("needle", 5)

    def test_weight_file(self):
        f = random_linear(7, make_rng(4))
        fd, path = tempfile.mkstemp(suffix=".txt")
        os.close(fd)
        try:
            f.save(path)
            loaded = make_function("file:%s" % path, 7)
            with self.assertRaises(ConfigurationError):
                make_function("file:%s" % path, 8)
        finally:
            os.remove(path)
        self.assertEqual(loaded.weights.tolist(), f.weights.tolist())


class PotentialTestCase(unittest.TestCase):

    def test_examples(self):
        self.assertEqual(eval_potential(Potential(WEIGHTED, 2), [1, 0]), 1.5)
        self.assertEqual(eval_potential(Potential(DROSTE, 4), [1, 0, 0, 1]), 3.0)
        self.assertEqual(eval_potential(Potential(HEYAO, 6, c=2.0), [0] * 6), 0.0)
        self.assertEqual(eval_potential(Potential(ONEMAX, 3), [1, 1, 0]), 2.0)

    def test_identity(self):
        f = binval(4)
        self.assertEqual(Potential(IDENTITY, 4, f=f)([0, 1, 0, 1]), 10.0)
        with self.assertRaises(ConfigurationError):
            Potential(IDENTITY, 4)

    def test_heyao_constant(self):
        with self.assertRaises(ConfigurationError):
            Potential(HEYAO, 4, c=1.0)
        with self.assertRaises(ConfigurationError):
            Potential(HEYAO, 4, c=2.5)
        g = Potential.by_name("heyao:1.5", 4)
        assert_near_equal(g([0, 0, 1, 1]), math.log(4.0), 1e-12)

    def test_unknown_kind(self):
        with self.assertRaises(ConfigurationError):
            Potential("entropy", 4)

    def test_zero_only_at_optimum(self):
        n = 6
        points = ((np.arange(1, 2 ** n)[:, None] >> np.arange(n)) & 1)
        for kind in (WEIGHTED, DROSTE, HEYAO, ONEMAX):
            values = Potential(kind, n).values(points)
            self.assertTrue(np.all(values > 0), kind)


class ExactDriftTestCase(unittest.TestCase):

    def test_small_example(self):
        assert_near_equal(exact_pointwise_drift(onemax(2), Potential(WEIGHTED, 2), [1, 0]), 0.25, 1e-12)

    def test_binval_top_bit(self):
        for n in (4, 8, 16):
            x = np.zeros(n, dtype=np.int8)
            x[-1] = 1
            value = exact_pointwise_drift(binval(n), Potential(ONEMAX, n), x)
            self.assertLess(abs(value - 1.0 / n ** 2), 1e-12)

    def test_optimum_has_no_drift(self):
        for g in (Potential(WEIGHTED, 5), Potential(DROSTE, 5), Potential(ONEMAX, 5)):
            self.assertEqual(exact_pointwise_drift(binval(5), g, [0] * 5), 0.0)

    def test_length_limits(self):
        with self.assertRaises(ConfigurationError):
            exact_pointwise_drift(onemax(21), Potential(ONEMAX, 21), [1] * 21)
        with self.assertRaises(ConfigurationError):
            exhaustive_drift_table(onemax(13), Potential(ONEMAX, 13))

    def test_single_flip_contribution(self):
        n = 8
        g = Potential(ONEMAX, n)
        for k in range(1, n + 1):
            x = np.zeros(n, dtype=np.int8)
            x[:k] = 1
            drift = exact_pointwise_drift(onemax(n), g, x)
            self.assertGreaterEqual(drift, k * (1 / n) * (1 - 1 / n) ** (n - 1) - 1e-15)

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.integers(0, 1), min_size=6, max_size=6), st.floats(0.1, 100.0))
    def test_selection_properties(self, bits, c):
        f = random_linear(6, make_rng(17))
        x = np.array(bits, dtype=np.int8)
        self.assertGreaterEqual(exact_pointwise_drift(f, Potential(IDENTITY, 6, f=f), x), -1e-12)
        g = Potential(WEIGHTED, 6)
        self.assertEqual(exact_pointwise_drift(f, g, x), exact_pointwise_drift(f.scaled(c), g, x))


class ExhaustiveCheckTestCase(unittest.TestCase):

    def test_weighted_drift_onemax_binval(self):
        for f in (onemax(10), binval(10)):
            report = weighted_drift_check(f)
            self.assertTrue(report.passed, f.description)
            self.assertGreaterEqual(report.worst_ratio, 1.0)

    def test_weighted_drift_equal_weights(self):
        report = weighted_drift_check(LinearFunction([7.0] * 8))
        self.assertTrue(report.passed)
        assert_near_equal(report.worst_ratio, weighted_drift_check(onemax(8)).worst_ratio, 1e-12)

    def test_weighted_drift_random(self):
        for seed in range(3):
            self.assertTrue(weighted_drift_check(random_linear(9, make_rng(seed))).passed)

    def test_table_shape(self):
        table = exhaustive_drift_table(binval(5), Potential(DROSTE, 5))
        self.assertEqual(table.points.shape, (31, 5))
        self.assertTrue(np.all(table.potential > 0))

    def test_heyao_additive_drift_positive(self):
        self.assertGreater(heyao_additive_drift(binval(8), c=1.5), 0.0)


class LevelProbabilityTestCase(unittest.TestCase):

    def test_examples(self):
        assert_near_equal(level_probability(2, 1, 0), 0.25, 1e-15)
        assert_near_equal(level_probability(3, 2, 1), 9.0 / 27.0, 1e-12)
        assert_near_equal(level_probability(2, 2, 0), 0.25, 1e-15)
        for n in (1, 5, 30):
            assert_near_equal(level_probability(n, 0, 0), (1 - 1 / n) ** n, 1e-12)

    def test_out_of_range(self):
        with self.assertRaises(ConfigurationError):
            level_probability(4, 5, 0)
        with self.assertRaises(ConfigurationError):
            level_probability(4, 1, -1)

    def test_rows_sum_to_one(self):
        for n in (1, 7, 14):
            table = level_probability_table(n).entries
            self.assertLess(np.max(np.abs(table.sum(axis=1) - 1.0)), 1e-12)

    def test_convolution_row_matches_formula(self):
        n = 11
        table = level_probability_table(n).entries
        for k in range(n + 1):
            self.assertLess(np.max(np.abs(level_probability_row(n, k) - table[k])), 1e-12)

    def test_enumeration_matches_formula(self):
        n = 8
        diff = np.abs(level_probability_table(n).entries - enumerate_level_probabilities(n))
        self.assertLess(np.max(diff), 1e-12)

    def test_monotonicity(self):
        for n in (2, 10):
            report = level_monotonicity_check(n)
            self.assertTrue(report.passed)
            self.assertEqual(report.violations, [])
            self.assertLessEqual(report.max_enumeration_error, 1e-12)

    def test_monotonicity_limit(self):
        with self.assertRaises(ConfigurationError):
            level_monotonicity_check(15)


class OneMaxLevelChainTestCase(unittest.TestCase):

    def test_single_bit(self):
        assert_near_equal(exact_onemax_runtime(1), 0.5, 1e-12)

    def test_times_increase_with_level(self):
        mu = exact_onemax_times(30)
        self.assertEqual(mu[0], 0.0)
        self.assertTrue(np.all(np.diff(mu) > 0))

    def test_within_bounds(self):
        n = 100
        value = exact_onemax_runtime(n)
        self.assertLess(value, bound_catalog("onemax_upper", n))
        self.assertGreater(value, 0.5 * E * n * math.log(n))


class MonteCarloCheckTestCase(unittest.TestCase):

    def test_onemax_drift_on_onemax(self):
        report = onemax_drift_check(onemax(30), 1000, seed=42)
        self.assertTrue(report.passed)
        self.assertTrue(report.tested)
        statuses = {lc.status for lc in report.levels}
        self.assertTrue(statuses <= {"pass", "untested"})

    def test_onemax_drift_on_binval(self):
        report = onemax_drift_check(binval(30), 1000, seed=7)
        self.assertTrue(report.passed)

    def test_bit_ordering_binval(self):
        report = bit_zero_ordering_check(binval(20), 100, 20000, seed=42)
        self.assertTrue(report.passed)

    def test_bit_ordering_at_start(self):
        report = bit_zero_ordering_check(binval(10), 0, 20000, seed=1)
        self.assertTrue(report.passed)
        assert_near_equal(report.probabilities, 0.5 * np.ones(10), 0.05)

    def test_single_bit_vacuous(self):
        self.assertTrue(bit_zero_ordering_check(binval(1), 10, 10**4, seed=1).passed)

    def test_preconditions(self):
        with self.assertRaises(ConfigurationError):
            onemax_drift_check(onemax(10), 999)
        with self.assertRaises(ConfigurationError):
            bit_zero_ordering_check(binval(10), 10, 9999)
        # OneMax weights tie, so positions are interchangeable
        with self.assertRaises(ConfigurationError):
            bit_zero_ordering_check(onemax(10), 10, 10**4)
        with self.assertRaises(ConfigurationError):
            bit_zero_ordering_check(LinearFunction([1.0, 2.0, 2.0, 3.0]), 10, 10**4)


class BoundCatalogTestCase(unittest.TestCase):

    def test_values(self):
        assert_near_equal(bound_catalog("onemax_upper", 100), E * 100 * (1 + math.log(50)), 1e-12)
        assert_near_equal(bound_catalog("linear_upper_139", 1000), E / (E - 2) * 1000 * math.log(1000), 1e-12)
        assert_near_equal(bound_catalog("binval_upper", 4), E * 4 * (1 + math.log(7.5)), 1e-12)
        assert_near_equal(bound_catalog("onemax_lower_asymptotic", 10), E * 10 * math.log(10), 1e-12)

    def test_large_n_does_not_overflow(self):
        value = bound_catalog("binval_upper", 5000)
        self.assertTrue(math.isfinite(value))
        assert_near_equal(value, E * 5000 * (1 + 4999 * math.log(2)), 1e-9)

    def test_flags(self):
        self.assertTrue(is_asymptotic("onemax_lower_asymptotic"))
        self.assertFalse(is_asymptotic("onemax_upper"))

    def test_unknown(self):
        with self.assertRaises(ConfigurationError):
            bound_catalog("busy_beaver", 10)


if __name__ == '__main__':
    unittest.main()
