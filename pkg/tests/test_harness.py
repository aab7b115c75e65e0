import filecmp
import math
import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from rmtransport.approximations import MethodKind
from rmtransport.errors import ConfigurationError
from rmtransport.harness import ProblemSpec, builtin_problem, relative_l2_error, run_comparison, with_overrides

REDUCED_METHODS = [kind.value for kind in MethodKind if kind is not MethodKind.REFERENCE]


class TestProblems(unittest.TestCase):

    def test_test_a(self):
        problem = builtin_problem("test-a")
        self.assertEqual(problem.step_count, 50)
        self.assertEqual(problem.speed_cm_per_ns, 30.0)
        self.assertEqual(problem.cell_count, 100)
        self.assertEqual(problem.inflow_left, 100.0)

    def test_test_b(self):
        problem = builtin_problem("test-b")
        self.assertEqual(problem.step_count, 20)
        self.assertAlmostEqual(problem.sigma_s, 99.99, delta=1e-12)
        self.assertAlmostEqual(problem.sigma_a, 1e-2, delta=1e-12)

    def test_unknown_problem(self):
        with self.assertRaises(ConfigurationError):
            builtin_problem("test-c")

    def test_invalid_parameters(self):
        for overrides in [dict(dt=0.03), dict(sigma_t=-1.0), dict(sigma_s=1.0), dict(tolerance_mode="loose"),
                          dict(cell_count=0), dict(dt=0.0)]:
            with self.subTest(overrides=overrides):
                with self.assertRaises(ConfigurationError):
                    with_overrides(builtin_problem("test-a"), **overrides)

    def test_overrides_ignore_none(self):
        problem = with_overrides(builtin_problem("test-a"), cell_count=10, dt=None)
        self.assertEqual(problem.cell_count, 10)
        self.assertEqual(problem.dt, 0.02)


class TestRelativeError(unittest.TestCase):

    def test_identical(self):
        self.assertEqual(relative_l2_error([1.0, 2.0], [1.0, 2.0]), (0.0, True))

    def test_scaled(self):
        reference = np.array([0.3, 1.7, 2.2])
        self.assertAlmostEqual(relative_l2_error(1.01 * reference, reference).value, 0.01, places=14)

    def test_zero_entry_in_reference(self):
        self.assertAlmostEqual(relative_l2_error([3.0, 4.0], [0.0, 5.0]).value, math.sqrt(10.0) / 5.0, delta=1e-15)

    def test_zero_reference(self):
        error = relative_l2_error([3.0, 4.0], [0.0, 0.0])
        self.assertFalse(error.relative)
        self.assertAlmostEqual(error.value, 5.0, delta=1e-15)

    def test_length_mismatch(self):
        with self.assertRaises(ConfigurationError):
            relative_l2_error([1.0], [1.0, 2.0])


class TestComparisonTestA(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.problem = builtin_problem("test-a")
        cls.report = run_comparison(cls.problem, list(MethodKind))

    def test_all_methods_converge(self):
        self.assertEqual(self.report.failures, {})
        self.assertEqual(list(self.report.summary["status"]), ["converged"] * 6)

    def test_reference_column_is_zero(self):
        np.testing.assert_array_equal(self.report.comparison["reference_phi_bar_error"], 0.0)
        np.testing.assert_array_equal(self.report.comparison["reference_phi_hat_error"], 0.0)

    def test_first_step_is_exact(self):
        first = self.report.comparison.iloc[0]
        for method in REDUCED_METHODS:
            with self.subTest(method=method):
                self.assertLessEqual(first[f"{method}_phi_bar_error"], 1e-12)
                self.assertLessEqual(first[f"{method}_phi_hat_error"], 1e-12)

    def test_errors_are_finite_and_non_negative(self):
        for method in REDUCED_METHODS:
            with self.subTest(method=method):
                errors = self.report.comparison[f"{method}_phi_bar_error"].to_numpy()
                self.assertTrue(np.all(np.isfinite(errors)))
                self.assertTrue(np.all(errors >= 0.0))
                self.assertGreater(errors[-1], 0.0)

    def test_final_error_ordering(self):
        errors = [self.report.final_error(method) for method in ("sr-sl", "beta-lr", "beta-bar", "p1", "zero-slope")]
        for smaller, larger in zip(errors, errors[1:]):
            self.assertLess(smaller, larger)

    def test_iteration_counts(self):
        counts = {method.value: self.report.comparison[f"{method.value}_iterations"] for method in MethodKind}
        for method in ("reference", "zero-slope", "p1", "sr-sl", "beta-bar"):
            with self.subTest(method=method):
                self.assertTrue(np.all(counts[method] >= 4))
                self.assertTrue(np.all(counts[method] <= 6))
        self.assertLessEqual(counts["reference"].max() - counts["reference"].min(), 1)
        self.assertTrue(np.all(counts["beta-lr"] >= 4))
        self.assertTrue(np.all(counts["beta-lr"] <= 9))
        self.assertGreaterEqual(counts["beta-lr"].mean(), counts["reference"].mean())
        for method in MethodKind:
            with self.subTest(method=method):
                self.assertEqual(counts[method.value].iloc[0], counts["reference"].iloc[0])

    def test_balance(self):
        for method in MethodKind:
            with self.subTest(method=method):
                self.assertTrue(np.all(self.report.comparison[f"{method.value}_balance"] <= 1e-10))

    def test_memory_accounting(self):
        summary = self.report.summary.set_index("method")
        self.assertEqual(summary.loc["reference", "angular_values"], 1600)
        for method in REDUCED_METHODS:
            with self.subTest(method=method):
                self.assertEqual(summary.loc[method, "angular_values"], 800)
                self.assertEqual(summary.loc["reference", "persisted_bytes"] - summary.loc[method, "persisted_bytes"],
                                 800 * 8)


class TestComparisonTestB(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.report = run_comparison(builtin_problem("test-b"), list(MethodKind))

    def test_all_methods_converge(self):
        self.assertEqual(self.report.failures, {})
        self.assertFalse(self.report.comparison.isna().any().any())
        self.assertEqual(len(self.report.comparison), 20)

    def test_beta_methods_beat_zero_slope(self):
        zero_slope = self.report.final_error("zero-slope")
        self.assertLessEqual(self.report.final_error("beta-bar"), zero_slope)
        self.assertLessEqual(self.report.final_error("beta-lr"), zero_slope)

    def test_balance(self):
        for method in MethodKind:
            with self.subTest(method=method):
                self.assertTrue(np.all(self.report.comparison[f"{method.value}_balance"] <= 1e-10))


class TestComparisonFiles(unittest.TestCase):

    def setUp(self):
        self.problem = with_overrides(builtin_problem("test-a"), cell_count=10, t_end=0.1)
        self.methods = [MethodKind.REFERENCE, MethodKind.ZERO_SLOPE]

    def test_files_are_written(self):
        with tempfile.TemporaryDirectory() as directory:
            run_comparison(self.problem, self.methods, directory)
            for name in ["reference.csv", "reference_steps.csv", "zero-slope.csv", "zero-slope_steps.csv",
                         "comparison.csv", "summary.csv"]:
                with self.subTest(name=name):
                    self.assertTrue(os.path.exists(os.path.join(directory, name)))
            snapshots = pd.read_csv(os.path.join(directory, "zero-slope.csv"))
            self.assertEqual(list(snapshots.columns),
                             ["step", "time", "cell", "x", "phi_bar", "phi_hat", "j_bar", "j_hat", "lambda"])
            self.assertEqual(len(snapshots), 5 * 10)

    def test_outputs_are_deterministic(self):
        with tempfile.TemporaryDirectory() as first, tempfile.TemporaryDirectory() as second:
            run_comparison(self.problem, self.methods, first)
            run_comparison(self.problem, self.methods, second, jobs=2)
            for name in ["comparison.csv", "summary.csv", "reference.csv", "zero-slope.csv"]:
                with self.subTest(name=name):
                    self.assertTrue(filecmp.cmp(os.path.join(first, name), os.path.join(second, name), shallow=False))

    def test_cached_reference(self):
        with tempfile.TemporaryDirectory() as directory:
            full = run_comparison(self.problem, self.methods, directory)
            cached = run_comparison(self.problem, [MethodKind.ZERO_SLOPE], directory)
            np.testing.assert_allclose(cached.comparison["zero-slope_phi_bar_error"],
                                       full.comparison["zero-slope_phi_bar_error"], rtol=1e-14)

    def test_missing_reference(self):
        with tempfile.TemporaryDirectory() as directory:
            with self.assertRaises(ConfigurationError):
                run_comparison(self.problem, [MethodKind.P1], directory)


if __name__ == "__main__":
    unittest.main()
