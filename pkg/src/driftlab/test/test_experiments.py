import contextlib
import csv
import io
import json
import os
import shutil
import tempfile
import unittest

from openmdao.utils.assert_utils import assert_near_equal

from driftlab import cli
from driftlab.errors import ConfigurationError, EmptyInputError
from driftlab.experiments import (CSV_HEADER, PRESETS, SUITE_ALIASES, SUITES, Check, ExperimentSpec,
                                  VerifyReport, cmd_bounds, cmd_drift_report, cmd_graph_run,
                                  cmd_ordering_test, cmd_sweep, cmd_verify, suite_names)
from driftlab.graphs import kruskal, load_graph, mst_bound, random_graph
from driftlab.linear import bound_catalog, exact_onemax_runtime
from driftlab.seeding import child_seed, make_rng


class SweepTestCase(unittest.TestCase):

    def setUp(self):
        self.tempdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tempdir, ignore_errors=True)

    def _spec(self, **kwargs):
        options = dict(functions=["onemax", "binval", "random"], n_values=[8, 16], reps=5, seed=7)
        options.update(kwargs)
        return ExperimentSpec(**options)

    def test_rows_and_cells(self):
        result = cmd_sweep(self._spec())
        self.assertEqual(len(result.rows), 3 * 2 * 5)
        self.assertEqual(len(result.cells), 6)
        first = result.rows[0]
        self.assertEqual(first[:3], ("onemax", 8, 0))
        self.assertEqual(first[3], child_seed(child_seed(7, 0), 0))
        self.assertTrue(all(row[5] == 0 for row in result.rows))

        onemax_cell = result.cells[0]
        assert_near_equal(onemax_cell["exact_mean"], exact_onemax_runtime(8), 1e-12)
        assert_near_equal(onemax_cell["bounds"]["onemax_upper"], bound_catalog("onemax_upper", 8), 1e-12)
        self.assertNotIn("exact_mean", result.cells[2])

    def test_output_files_are_reproducible(self):
        paths = []
        for i in range(2):
            out_csv = os.path.join(self.tempdir, "runs%d.csv" % i)
            out_json = os.path.join(self.tempdir, "summary%d.json" % i)
            cmd_sweep(self._spec(out_csv=out_csv, out_json=out_json))
            paths.append((out_csv, out_json))

        for a, b in zip(*paths):
            with open(a, "rb") as fa, open(b, "rb") as fb:
                self.assertEqual(fa.read(), fb.read())

        with open(paths[0][0]) as stream:
            reader = csv.reader(stream)
            self.assertEqual(tuple(next(reader)), CSV_HEADER)
            self.assertEqual(sum(1 for _ in reader), 30)
        with open(paths[0][1]) as stream:
            summary = json.load(stream)
        self.assertEqual(summary["seed"], 7)
        self.assertEqual(len(summary["cells"]), 6)

    def test_seed_changes_output(self):
        a = cmd_sweep(self._spec(functions=["binval"]))
        b = cmd_sweep(self._spec(functions=["binval"], seed=8))
        self.assertNotEqual(a.csv_text(), b.csv_text())

    def test_spec_validation(self):
        with self.assertRaises(ValueError):
            self._spec(functions=["needle"])
        with self.assertRaises(ValueError):
            self._spec(n_values=[])
        with self.assertRaises(ValueError):
            self._spec(reps=0)
        with self.assertRaises(ConfigurationError):
            ExperimentSpec.from_preset("huge")

    def test_presets(self):
        spec = ExperimentSpec.from_preset("paper", reps=None, seed=3)
        self.assertEqual(spec["n_values"][0], 20)
        self.assertEqual(spec["n_values"][-1], 1000)
        self.assertEqual(spec["reps"], 1000)
        self.assertEqual(spec["seed"], 3)
        self.assertEqual(sorted(PRESETS), ["paper", "quick"])


class OrderingTestCase(unittest.TestCase):

    def test_self_comparison(self):
        result = cmd_ordering_test(20, 30, other="onemax", seed=5)
        self.assertEqual(result.relative_gap, 0.0)
        self.assertEqual(result.one_sided_p, 0.5)
        self.assertTrue(result.passed)

    def test_binval_not_faster(self):
        result = cmd_ordering_test(30, 200, other="binval", seed=42)
        self.assertTrue(result.passed)
        self.assertGreater(result.relative_gap, -0.05)


class DriftReportTestCase(unittest.TestCase):

    def test_exhaustive_weighted(self):
        report = cmd_drift_report("binval", "weighted", 6, 0, mode="exhaustive")
        self.assertTrue(report.passed)
        self.assertEqual(len(report.rows), 63)
        self.assertTrue(all(row["status"] == "pass" for row in report.rows))

    def test_monte_carlo_onemax(self):
        report = cmd_drift_report("onemax", "onemax", 20, 200, seed=3)
        self.assertTrue(report.passed)
        levels = [row["level"] for row in report.rows]
        self.assertEqual(levels, sorted(levels))
        self.assertEqual(report.csv_text().splitlines()[0],
                         "level,mean_decrease,samples,ci_halfwidth,required,status")

    def test_unchecked_potential(self):
        report = cmd_drift_report("binval", "droste", 5, 0, mode="exhaustive")
        self.assertTrue(all(row["status"] == "unchecked" for row in report.rows))
        self.assertIsNone(report.bound)

    def test_errors(self):
        with self.assertRaises(EmptyInputError):
            cmd_drift_report("onemax", "onemax", 10, 0)
        with self.assertRaises(ConfigurationError):
            cmd_drift_report("mst", "onemax", 10, 10)
        with self.assertRaises(ConfigurationError):
            cmd_drift_report("onemax", "onemax", 10, 10, mode="analytic")


class GraphAndBoundsTestCase(unittest.TestCase):

    def test_bounds(self):
        rows = cmd_bounds([20, 100])
        self.assertEqual([row["m"] for row in rows], [60.0, 300.0])
        assert_near_equal(rows[1]["mst_upper"], mst_bound(300, 10), 1e-12)

    def test_graph_run_mst(self):
        g = random_graph(6, 10, 5, make_rng(11))
        summary = cmd_graph_run(g, "mst", 5, seed=1)
        self.assertEqual(summary["optimum"], kruskal(g)[0])
        self.assertEqual(summary["capped"], 0)
        self.assertNotIn("drift_passed", summary)

    def test_graph_run_sssp(self):
        g = random_graph(6, 12, 5, make_rng(21), directed=True)
        summary = cmd_graph_run(g, "sssp", 5, seed=1, start="unset")
        self.assertEqual(summary["problem"], "sssp")
        self.assertEqual(summary["capped"], 0)

    def test_graph_run_unknown(self):
        with self.assertRaises(ConfigurationError):
            cmd_graph_run(load_graph("3 3 / 0 1 1 / 1 2 2 / 0 2 3"), "tsp", 1)


class VerifyTestCase(unittest.TestCase):

    def test_cheap_suites_pass(self):
        for suite in ("binval-corner", "level-monotonicity", "euler", "weighted-drift",
                      "multiplicative-synthetic"):
            report = cmd_verify(suite, seed=42, scale="quick")
            self.assertTrue(report.passed, "\n".join(report.lines()))
            self.assertTrue(report.checks)

    def _assert_suite_passes(self, suite):
        report = cmd_verify(suite, seed=42, scale="quick")
        self.assertTrue(report.checks)
        self.assertTrue(report.passed, "\n".join(report.lines()))

    def test_ideal_potential_suite(self):
        self._assert_suite_passes("ideal-potential")

    def test_onemax_runtime_suite(self):
        self._assert_suite_passes("onemax-runtime")

    def test_linear_runtime_suite(self):
        self._assert_suite_passes("linear-runtime")

    def test_onemax_fastest_suite(self):
        self._assert_suite_passes("onemax-fastest")

    def test_onemax_drift_suite(self):
        self._assert_suite_passes("onemax-drift")

    def test_graph_suites(self):
        for suite in ("mst", "sssp"):
            self._assert_suite_passes(suite)

    def test_mutation_suite(self):
        self._assert_suite_passes("mutation")

    def test_suite_aliases(self):
        for alias, suite in SUITE_ALIASES.items():
            self.assertIn(suite, SUITES)
            self.assertIn(alias, suite_names())
        report = cmd_verify("lemma5", scale="quick")
        self.assertEqual(report.suite, "lemma5")
        self.assertTrue(report.passed, "\n".join(report.lines()))
        direct = cmd_verify("level-monotonicity", scale="quick")
        self.assertEqual(report.lines(), direct.lines())
        self.assertTrue(cmd_verify("lemma3", scale="quick").passed)
        self.assertTrue(cmd_verify("theorem2-synthetic", scale="quick").passed)

    def test_diagnostic_checks_do_not_fail(self):
        report = VerifyReport("demo", [Check("a", 2.0, 1.0, "<=", False, diagnostic=True),
                                       Check("b", 1.0, 1.0, "<=", True)])
        self.assertTrue(report.passed)
        self.assertTrue(report.lines()[0].startswith("DIAG"))

    def test_unknown_suite(self):
        with self.assertRaises(ConfigurationError):
            cmd_verify("no-such-suite")
        with self.assertRaises(ConfigurationError):
            cmd_verify("euler", scale="huge")


class CommandLineTestCase(unittest.TestCase):

    def setUp(self):
        self.tempdir = tempfile.mkdtemp()

    def tearDown(self):
        shutil.rmtree(self.tempdir, ignore_errors=True)

    def _main(self, argv):
        out = io.StringIO()
        with contextlib.redirect_stdout(out):
            status = cli.main(argv)
        return status, out.getvalue()

    def test_verify_exit_code(self):
        status, text = self._main(["verify", "binval-corner"])
        self.assertEqual(status, cli.EXIT_PASS)
        self.assertIn("binval-corner: PASS", text)

    def test_verify_by_alias(self):
        status, text = self._main(["verify", "lemma5"])
        self.assertEqual(status, cli.EXIT_PASS)
        self.assertIn("lemma5: PASS", text)

    def test_sweep_to_csv(self):
        path = os.path.join(self.tempdir, "runs.csv")
        status, _ = self._main(["sweep", "--n", "8,12", "--reps", "3", "--function", "onemax",
                                "--out-csv", path])
        self.assertEqual(status, cli.EXIT_PASS)
        with open(path) as stream:
            self.assertEqual(len(stream.read().splitlines()), 1 + 2 * 3)

    def test_bounds_json(self):
        path = os.path.join(self.tempdir, "bounds.json")
        status, _ = self._main(["bounds", "--n", "10,20", "--out-json", path])
        self.assertEqual(status, cli.EXIT_PASS)
        with open(path) as stream:
            self.assertEqual(len(json.load(stream)), 2)

    def test_ordering_stdout(self):
        status, text = self._main(["ordering-test", "--n", "10", "--reps", "20", "--function", "onemax"])
        self.assertEqual(status, cli.EXIT_PASS)
        self.assertTrue(json.loads(text)["passed"])

    def test_configuration_errors(self):
        status, _ = self._main(["drift-report", "--function", "mst"])
        self.assertEqual(status, cli.EXIT_ERROR)
        status, _ = self._main(["graph-run", "--graph-file", os.path.join(self.tempdir, "missing.txt")])
        self.assertEqual(status, cli.EXIT_ERROR)
        status, _ = self._main(["drift-report", "--function", "onemax", "--reps", "0"])
        self.assertEqual(status, cli.EXIT_ERROR)

    def test_graph_run_from_file(self):
        path = os.path.join(self.tempdir, "graph.txt")
        with open(path, "w") as stream:
            stream.write(random_graph(6, 10, 5, make_rng(11)).to_text())
        status, text = self._main(["graph-run", "--graph-file", path, "--reps", "3"])
        self.assertEqual(status, cli.EXIT_PASS)
        self.assertEqual(json.loads(text)["problem"], "mst")


if __name__ == '__main__':
    unittest.main()
