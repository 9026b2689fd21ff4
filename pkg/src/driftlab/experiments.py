"""
Experiment drivers behind the ``driftlab`` command line.

Sweeps of optimization times over functions and sizes, the paired OneMax
ordering test, drift reports, bound tables, graph runs and the named
verification suites. Every driver is deterministic given its master seed.
"""

import csv
import io
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from functools import partial

import numpy as np
import openmdao.api as om

from driftlab import drift, graphs, linear
from driftlab.components import bound_table
from driftlab.ea import RunConfig, mutate, run_batch
from driftlab.errors import ConfigurationError, EmptyInputError
from driftlab.seeding import child_seed, make_rng
from driftlab.stats import (binomial_goodness_of_fit, paired_greater_pvalue,
                            summarize, within_standard_errors)

logger = logging.getLogger(__name__)

E = math.e
CSV_HEADER = ("function", "n", "rep", "seed", "T", "capped")
EXACT_ONEMAX_MAX_N = 200
SWEEP_FUNCTIONS = ("onemax", "binval", "random")

PRESETS = {
    "quick": {"n_values": [100, 200], "reps": 100},
    "paper": {"n_values": list(range(20, 1001, 20)), "reps": 1000},
}

# bounds embedded in the sweep summary, per function
SWEEP_BOUNDS = {
    "onemax": ("onemax_upper", "onemax_lower_asymptotic"),
    "binval": ("binval_upper", "linear_upper_139", "linear_lower_asymptotic"),
    "random": ("linear_upper_139", "linear_lower_asymptotic"),
}


def _check_functions(name, value):
    for fname in value:
        if fname not in SWEEP_FUNCTIONS and not fname.startswith("file:"):
            raise ValueError("%s: unknown function %r" % (name, fname))


def _check_n_values(name, value):
    if not value:
        raise ValueError("%s must not be empty" % name)
    if any(int(n) < 1 for n in value):
        raise ValueError("%s must be positive" % name)


class ExperimentSpec(om.OptionsDictionary):
    """Options of a runtime sweep."""

    def __init__(self, **kwargs):
        super(ExperimentSpec, self).__init__(parent_name="ExperimentSpec")
        self.declare("functions", types=list, default=list(SWEEP_FUNCTIONS),
                     check_valid=_check_functions, desc="function names to sweep")
        self.declare("n_values", types=list, default=PRESETS["quick"]["n_values"],
                     check_valid=_check_n_values, desc="problem sizes")
        self.declare("reps", types=int, default=PRESETS["quick"]["reps"], lower=1,
                     desc="repetitions per (function, n) cell")
        self.declare("seed", types=int, default=42, lower=0, upper=2**64 - 1,
                     desc="master seed")
        self.declare("out_csv", types=str, default=None, allow_none=True,
                     desc="per-run CSV path")
        self.declare("out_json", types=str, default=None, allow_none=True,
                     desc="summary JSON path")
        self.declare("workers", types=int, default=1, lower=1,
                     desc="worker processes per batch")
        self.update(kwargs)

    @classmethod
    def from_preset(cls, name, **kwargs):
        try:
            preset = PRESETS[name]
        except KeyError:
            raise ConfigurationError("unknown preset %r; choose from %s" % (name, sorted(PRESETS)))
        options = dict(preset)
        options.update((k, v) for k, v in kwargs.items() if v is not None)
        return cls(**options)


def _oracle(name, n):
    # random functions are drawn per repetition from the repetition seed
    if name == "random":
        return partial(linear.random_linear, n)
    return linear.make_function(name, n)


def _json_number(x):
    return None if x is None or (isinstance(x, float) and math.isnan(x)) else x


@dataclass
class SweepResult:
    rows: list
    cells: list

    def csv_text(self):
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        writer.writerows(self.rows)
        return buffer.getvalue()


def cmd_sweep(spec):
    """
    Run every (function, n) cell of ``spec``. Cell i uses the child seed
    (master, i); its repetition r uses child_seed(cell seed, r).
    """
    rows = []
    cells = []
    index = 0
    for name in spec["functions"]:
        for n in spec["n_values"]:
            n = int(n)
            config = RunConfig(n=n, seed=child_seed(spec["seed"], index))
            index += 1
            batch = run_batch(_oracle(name, n), config, spec["reps"], workers=spec["workers"])
            for rep, record in enumerate(batch.records):
                rows.append((name, n, rep, record.seed, record.T, int(record.capped)))

            cell = {
                "function": name,
                "n": n,
                "reps": spec["reps"],
                "mean": _json_number(batch.mean),
                "median": _json_number(batch.median),
                "sd": _json_number(batch.sd),
                "ci_halfwidth": _json_number(batch.ci_halfwidth),
                "capped": batch.capped_count,
                "bounds": {b: linear.bound_catalog(b, n) for b in SWEEP_BOUNDS.get(name, ())},
            }
            if name == "onemax" and n <= EXACT_ONEMAX_MAX_N:
                cell["exact_mean"] = linear.exact_onemax_runtime(n)
            cells.append(cell)
            logger.info("sweep %s n=%d: mean T %.1f", name, n, batch.mean)

    result = SweepResult(rows, cells)
    if spec["out_csv"]:
        with open(spec["out_csv"], "w", newline="") as stream:
            stream.write(result.csv_text())
    if spec["out_json"]:
        with open(spec["out_json"], "w") as stream:
            json.dump({"seed": spec["seed"], "cells": cells}, stream, indent=2, sort_keys=True)
    return result


@dataclass
class OrderingTestResult:
    """Paired comparison of a function's optimization time with OneMax's."""

    mean_onemax: float
    mean_other: float
    relative_gap: float
    one_sided_p: float
    passed: bool
    other: str = ""
    n: int = 0
    reps: int = 0


def cmd_ordering_test(n, reps, other="binval", seed=42, workers=1):
    """
    OneMax and ``other`` are run with the same repetition seeds, so the
    initial points coincide. Passes when the one-sided paired test gives
    p <= 0.05 or the means agree within two pooled standard errors.
    """
    config = RunConfig(n=n, seed=seed)
    base = run_batch(linear.onemax(n), config, reps, workers=workers)
    challenger = run_batch(_oracle(other, n), config, reps, workers=workers)

    t_base = np.array([r.T for r in base.records], dtype=float)
    t_other = np.array([r.T for r in challenger.records], dtype=float)
    mean_base, mean_other = float(t_base.mean()), float(t_other.mean())
    p = paired_greater_pvalue(t_other, t_base)

    pooled = math.sqrt(summarize(t_base).standard_error ** 2 + summarize(t_other).standard_error ** 2)
    passed = p <= 0.05 or abs(mean_other - mean_base) <= 2.0 * pooled
    gap = (mean_other - mean_base) / mean_base if mean_base else 0.0
    logger.info("ordering %s vs onemax at n=%d: gap %.4f, p %.4g", other, n, gap, p)
    return OrderingTestResult(mean_base, mean_other, gap, p, passed, other, n, reps)


# required drift per level, by potential
REQUIRED_DRIFT = {
    linear.ONEMAX: lambda n: (E - 2.0) / (E * n),
    linear.WEIGHTED: lambda n: 1.0 / (4.0 * E * n),
}

DRIFT_COLUMNS = ("level", "mean_decrease", "samples", "ci_halfwidth", "required", "status")


@dataclass
class DriftReport:
    rows: list
    passed: bool
    bound: str = None

    def csv_text(self):
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, DRIFT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(self.rows)
        return buffer.getvalue()


def _status(mean, half, required, samples, min_samples):
    if required is None:
        return "unchecked"
    if samples < min_samples:
        return "untested"
    return "fail" if mean + 2.0 * half < required else "pass"


def cmd_drift_report(function, potential, n, reps, seed=42, mode="mc", min_samples=500,
                     graph=None, out_csv=None):
    """
    Conditional drift of ``potential`` along runs on ``function``.

    mode 'mc' pools transitions of ``reps`` runs per exact level;
    mode 'exhaustive' tabulates the exact drift at every point (n <= 12).
    ``function`` 'mst' or 'sssp' runs on ``graph`` and checks the gap.
    """
    if function in ("mst", "sssp"):
        if graph is None:
            raise ConfigurationError("%s drift needs a graph" % function)
        if function == "mst":
            check = graphs.mst_drift_check(graph, reps, seed=seed)
            return DriftReport([], check.passed, "gap/(e m^2)")
        check = graphs.sssp_drift_check(graph, reps, seed=seed)
        return DriftReport([], check.passed, "gap ratio 1 - 1/(3 n^3)")

    if reps < 1 and mode == "mc":
        raise EmptyInputError("no runs to estimate drift from")
    f = linear.make_function(function, n, make_rng(child_seed(seed, 1)))
    g = linear.Potential.by_name(potential, n, f=f)
    required = REQUIRED_DRIFT.get(g.kind)
    rows = []
    if mode == "exhaustive":
        table = linear.exhaustive_drift_table(f, g)
        for point, level, value in zip(table.points, table.potential, table.drift):
            need = required(n) * level if required else None
            rows.append({"level": float(level), "mean_decrease": float(value), "samples": 1,
                         "ci_halfwidth": 0.0, "required": need,
                         "status": _status(value, 0.0, need, 1, 1)})
    elif mode == "mc":
        config = RunConfig(n=n, seed=seed, record_potential=g)
        batch = run_batch(f, config, reps)
        estimates = drift.estimate_conditional_drift([r.trace for r in batch.records],
                                                     exact_levels=g.kind != linear.HEYAO)
        for est in estimates:
            need = required(n) * est.level if required else None
            rows.append({"level": est.level, "mean_decrease": est.mean_decrease,
                         "samples": est.sample_count, "ci_halfwidth": est.ci_halfwidth,
                         "required": need,
                         "status": _status(est.mean_decrease, est.ci_halfwidth, need,
                                           est.sample_count, min_samples)})
    else:
        raise ConfigurationError("unknown drift report mode %r" % (mode,))

    report = DriftReport(rows, all(r["status"] != "fail" for r in rows),
                         "%s drift" % g.kind if required else None)
    if out_csv:
        with open(out_csv, "w", newline="") as stream:
            stream.write(report.csv_text())
    return report


def cmd_bounds(n_values, m=None, w_max=10, recorder_path=None):
    """Bound table over ``n_values``; graph bounds use n vertices and m = 3n edges by default."""
    cases = [{"n": float(n), "n_vertices": float(n), "m": float(m or 3 * n),
              "w_max": float(w_max)} for n in n_values]
    return bound_table(cases, recorder_path)


def cmd_graph_run(graph, problem, reps, seed=42, start="random", source=0, check_drift=False):
    """Batch of MST or SSSP runs on one graph with its bound and optimum."""
    if problem == "mst":
        batch = graphs.mst_batch(graph, reps, seed=seed, start=start)
        w_opt, _ = graphs.kruskal(graph)
        summary = {"problem": "mst", "optimum": w_opt,
                   "bound": graphs.mst_bound(graph.m, graph.w_max)}
        if check_drift:
            summary["drift_passed"] = graphs.mst_drift_check(graph, reps, seed=seed).passed
    elif problem == "sssp":
        batch = graphs.sssp_batch(graph, reps, source=source, seed=seed, start=start)
        summary = {"problem": "sssp", "optimum": float(graphs.dijkstra(graph, source).sum()),
                   "bound": graphs.sssp_bound(graph.n_vertices, graph.w_max),
                   "mutation": "reconstructed: 1 + Poisson(1) predecessor moves"}
        if check_drift:
            report = graphs.sssp_drift_check(graph, reps, source=source, seed=seed)
            summary["drift_diagnostic"] = asdict(report)
    else:
        raise ConfigurationError("unknown graph problem %r" % (problem,))
    summary.update(reps=reps, mean=_json_number(batch.mean), median=_json_number(batch.median),
                   ci_halfwidth=_json_number(batch.ci_halfwidth), capped=batch.capped_count)
    return summary


@dataclass
class Check:
    """One verified inequality: measured <relation> required."""

    name: str
    measured: float
    required: float
    relation: str
    passed: bool
    diagnostic: bool = False

    def describe(self):
        mark = "PASS" if self.passed else ("DIAG" if self.diagnostic else "FAIL")
        return "%s  %-48s %.6g %s %.6g" % (mark, self.name, self.measured, self.relation, self.required)


def _le(name, measured, required, diagnostic=False):
    return Check(name, float(measured), float(required), "<=", bool(measured <= required), diagnostic)


def _ge(name, measured, required, diagnostic=False):
    return Check(name, float(measured), float(required), ">=", bool(measured >= required), diagnostic)


@dataclass
class VerifyReport:
    suite: str
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks if not c.diagnostic)

    def lines(self):
        return [c.describe() for c in self.checks]


def _scaled(scale, full, quick):
    return full if scale == "full" else quick


def suite_multiplicative_synthetic(seed, scale):
    s0, delta = 1000, 0.001
    runs = _scaled(scale, 10**4, 2000)
    times = drift.synthetic_hitting_times(s0, delta, runs, make_rng(seed))
    s = summarize(times)
    exact = drift.harmonic_expected_time(s0, delta)
    bound = drift.multiplicative_bound(drift.BoundSpec(delta, s0, 1.0))
    checks = [_le("|mean T - harmonic sum| in standard errors",
                  abs(s.mean - exact) / s.standard_error, 3.0),
              _le("mean T vs multiplicative bound + 3 se", s.mean, bound + 3 * s.standard_error)]

    # the log-rescaled potential of a proportional process drops by >= delta per step
    trace = drift.synthetic_multiplicative_process(s0, 0.01, None, mode=drift.PROPORTIONAL)
    z = drift.log_rescale(trace.values, 1.0)
    checks.append(_ge("min additive drift of 1 + ln(X/smin)", float(np.min(z[:-1] - z[1:])), 0.01))
    return checks


def suite_ideal_potential(seed, scale):
    chains = _scaled(scale, 20, 5)
    runs = _scaled(scale, 10**5, 10**4)
    worst_residual = 0.0
    worst_sigma = 0.0
    for i in range(chains):
        rng = make_rng(child_seed(seed, i))
        chain = drift.random_chain(30, rng)
        mu = drift.ideal_potential(chain)
        worst_residual = max(worst_residual, drift.verify_unit_drift(chain, mu))
        s = summarize(drift.sample_hitting_times(chain, 0, runs, rng))
        worst_sigma = max(worst_sigma, abs(s.mean - mu[0]) / s.standard_error)
    return [_le("max |drift of ideal potential - 1|", worst_residual, 1e-9),
            _le("max |MC hitting time - solved| in standard errors", worst_sigma, 3.0)]


def suite_weighted_drift(seed, scale):
    n = 10
    functions = [linear.onemax(n), linear.binval(n)]
    functions += [linear.random_linear(n, make_rng(child_seed(seed, i)))
                  for i in range(_scaled(scale, 5, 2))]
    checks = []
    for i, f in enumerate(functions):
        report = linear.weighted_drift_check(f)
        checks.append(_ge("min drift*4en/g(x), %s #%d n=%d" % (f.description, i, n),
                          report.worst_ratio, 1.0))
    return checks


def suite_binval_corner(seed, scale):
    checks = []
    for n in (4, 8, 16):
        x = np.zeros(n, dtype=np.int8)
        x[-1] = 1
        value = linear.exact_pointwise_drift(linear.binval(n), linear.Potential(linear.ONEMAX, n), x)
        checks.append(_le("|OneMax drift at top bit - 1/n^2|, n=%d" % n, abs(value - 1.0 / n**2), 1e-12))
    return checks


def suite_level_monotonicity(seed, scale):
    n = _scaled(scale, 12, 10)
    report = linear.level_monotonicity_check(n)
    return [_le("monotonicity violations, n=%d" % n, len(report.violations), 0),
            _le("max |formula - enumeration|, n=%d" % n, report.max_enumeration_error, 1e-12)]


def suite_onemax_runtime(seed, scale):
    n = 100
    batch = run_batch(linear.onemax(n), RunConfig(n=n, seed=seed), _scaled(scale, 1000, 200))
    checks = [_ge("OneMax mean T, n=100", batch.mean, 0.5 * E * n * math.log(n)),
              _le("OneMax mean T, n=100", batch.mean, linear.bound_catalog("onemax_upper", n))]
    n = 500
    batch = run_batch(linear.onemax(n), RunConfig(n=n, seed=child_seed(seed, 1)),
                      _scaled(scale, 200, 30))
    checks.append(_le("OneMax mean T, n=500", batch.mean, linear.bound_catalog("onemax_upper", n)))
    return checks


def suite_linear_runtime(seed, scale):
    checks = []
    for n in _scaled(scale, (100, 500), (100,)):
        limit = 1.25 * linear.bound_catalog("linear_upper_139", n)
        reps = _scaled(scale, 100, 30)
        cases = [("binval", linear.binval(n))]
        cases += [("random #%d" % i, linear.random_linear(n, make_rng(child_seed(seed, 100 + i))))
                  for i in range(_scaled(scale, 5, 2))]
        for label, f in cases:
            batch = run_batch(f, RunConfig(n=n, seed=child_seed(seed, n)), reps)
            checks.append(_le("%s mean T, n=%d" % (label, n), batch.mean, limit))
    return checks


def suite_onemax_fastest(seed, scale):
    result = cmd_ordering_test(100, _scaled(scale, 1000, 500), "binval", seed=seed)
    return [_le("one-sided p (BinVal slower than OneMax)", result.one_sided_p, 0.05),
            _ge("relative gap BinVal vs OneMax", result.relative_gap, 0.0),
            _le("relative gap BinVal vs OneMax", result.relative_gap, 0.20)]


def suite_onemax_drift(seed, scale):
    n = 50
    f = linear.binval(n)
    report = linear.onemax_drift_check(f, _scaled(scale, 2000, 1000), seed=seed)
    failures = sum(1 for lc in report.levels if lc.status == "fail")
    ordering = linear.bit_zero_ordering_check(linear.binval(20), 100, _scaled(scale, 10**5, 2 * 10**4),
                                              seed=child_seed(seed, 1))
    return [_le("levels with OneMax drift below (e-2)k/(en)", failures, 0),
            _ge("levels tested", len(report.tested), 1),
            _le("bit-zero ordering violations, t=100", len(ordering.violations), 0)]


def suite_mst(seed, scale):
    instances = _scaled(scale, 10, 2)
    reps = _scaled(scale, 100, 20)
    checks = []
    off_optimum = 0
    worst_mean = 0.0
    for i in range(instances):
        g = graphs.random_graph(10, 30, 10, make_rng(child_seed(seed, i)))
        w_opt, _ = graphs.kruskal(g)
        records = [graphs.mst_run(g, child_seed(child_seed(seed, i), r), record_gap=True)
                   for r in range(reps)]
        off_optimum += sum(1 for r in records if not r.capped and r.final_value != w_opt)
        worst_mean = max(worst_mean, float(np.mean([r.T for r in records])))
        estimates = drift.pooled_drift_estimates([r.trace for r in records], 500)
        required = 1.0 / (E * g.m**2)
        report = drift.check_multiplicative_condition(estimates, required, min_samples=500)
        checks.append(Check("MST (drift + 2 CI)/level, graph %d" % i, report.worst_slack_ratio,
                            required, ">=", report.passed))
    checks.append(_le("MST runs ending off w_opt", off_optimum, 0))
    checks.append(_le("MST worst mean T", worst_mean, graphs.mst_bound(30, 10)))
    return checks


def suite_sssp(seed, scale):
    instances = _scaled(scale, 10, 2)
    reps = _scaled(scale, 100, 20)
    mismatches = 0
    worst_mean = 0.0
    checks = []
    for i in range(instances):
        g = graphs.random_graph(10, 30, 10, make_rng(child_seed(seed, i)), directed=True)
        target = graphs.dijkstra(g, 0)
        records = [graphs.sssp_run(g, 0, child_seed(child_seed(seed, i), r)) for r in range(reps)]
        for r in records:
            if not r.capped and not np.array_equal(graphs.tree_distances(r.final_point, g, 0), target):
                mismatches += 1
        worst_mean = max(worst_mean, float(np.mean([r.T for r in records])))
        diag = graphs.sssp_drift_check(g, reps, seed=child_seed(seed, 1000 + i))
        checks.append(_le("SSSP gap ratio, graph %d" % i, diag.worst_ratio, diag.required_ratio,
                          diagnostic=True))
    checks.append(_le("SSSP runs ending off Dijkstra distances", mismatches, 0))
    checks.append(_le("SSSP worst mean T", worst_mean, graphs.sssp_bound(10, 10)))
    return checks


def suite_euler(seed, scale):
    m = 300
    s = summarize(graphs.euler_surrogate_times(m, _scaled(scale, 10**4, 2000), make_rng(seed)))
    return [_le("Euler surrogate mean T, m=300", s.mean, graphs.euler_bound(m) + 3 * s.standard_error),
            _le("internal Euler bound vs e m ln m, m=300", graphs.euler_bound_internal(m),
                graphs.euler_bound(m))]


def suite_mutation(seed, scale):
    n = 20
    samples = _scaled(scale, 10**6, 10**5)
    rng = make_rng(seed)
    x = np.zeros(n, dtype=np.int8)
    flips = np.zeros(n, dtype=np.int64)
    counts = np.zeros(n + 1, dtype=np.int64)
    for _ in range(samples):
        y = mutate(x, rng)
        flips += y
        counts[int(y.sum())] += 1
    _, p = binomial_goodness_of_fit(counts, n, 1.0 / n)
    sigma = math.sqrt(samples * (1.0 / n) * (1.0 - 1.0 / n))
    worst = float(np.max(np.abs(flips - samples / n)) / sigma)
    return [_ge("chi-square p of flip counts vs Binomial(20, 1/20)", p, 0.001),
            _le("max per-position flip deviation in sigma", worst, 4.0)]


SUITES = {
    "multiplicative-synthetic": suite_multiplicative_synthetic,
    "ideal-potential": suite_ideal_potential,
    "weighted-drift": suite_weighted_drift,
    "binval-corner": suite_binval_corner,
    "level-monotonicity": suite_level_monotonicity,
    "onemax-runtime": suite_onemax_runtime,
    "linear-runtime": suite_linear_runtime,
    "onemax-fastest": suite_onemax_fastest,
    "onemax-drift": suite_onemax_drift,
    "mst": suite_mst,
    "sssp": suite_sssp,
    "euler": suite_euler,
    "mutation": suite_mutation,
}

# names accepted by ``verify`` in addition to the suite keys
SUITE_ALIASES = {
    "lemma3": "weighted-drift",
    "lemma5": "level-monotonicity",
    "theorem2-synthetic": "multiplicative-synthetic",
}


def suite_names():
    return ["all"] + sorted(SUITES) + sorted(SUITE_ALIASES)


def cmd_verify(suite, seed=42, scale="quick"):
    """Run one named suite, or 'all', and collect its checks."""
    if scale not in ("quick", "full"):
        raise ConfigurationError("scale must be 'quick' or 'full'")
    if suite == "all":
        names = list(SUITES)
    elif suite in SUITES:
        names = [suite]
    elif suite in SUITE_ALIASES:
        names = [SUITE_ALIASES[suite]]
    else:
        raise ConfigurationError("unknown suite %r; choose from %s" % (suite, suite_names()))
    report = VerifyReport(suite)
    for name in names:
        logger.info("running suite %s (%s)", name, scale)
        report.checks.extend(SUITES[name](seed, scale))
    return report
