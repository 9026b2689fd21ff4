"""
Closed-form runtime bounds as OpenMDAO components.

Each component evaluates bound formulas from problem sizes and provides
analytic partials, so the bounds can be swept with a DOE driver, recorded
to a case database and differentiated like any other model.
"""

import logging
import math
import os
import tempfile

import numpy as np
import openmdao.api as om

from driftlab.linear import binval_log_half_range

logger = logging.getLogger(__name__)

E = math.e
LN2 = math.log(2.0)

DEFAULT_SIZES = {"n": 100.0, "m": 30.0, "w_max": 10.0, "n_vertices": 10.0}


class MultiplicativeDriftBound(om.ExplicitComponent):
    """Expected hitting time bound (1 + ln(s0/smin)) / delta."""

    def setup(self):
        self.add_input("delta", 0.001, desc="lower bound on drift per unit of potential")
        self.add_input("s0", 1000.0, desc="initial potential")
        self.add_input("smin", 1.0, desc="smallest non-zero potential")

        self.add_output("bound", 1.0, desc="upper bound on the expected hitting time")
        self.add_output("e_folding_time", 1.0, desc="time after which E[X] <= s0/e")

        self.declare_partials("bound", ["delta", "s0", "smin"])
        self.declare_partials("e_folding_time", "delta")

    def compute(self, inputs, outputs):
        log_range = 1.0 + np.log(inputs["s0"] / inputs["smin"])
        outputs["bound"] = log_range / inputs["delta"]
        # E[X_t] <= (1 - delta)^t s0 <= s0 exp(-delta t)
        outputs["e_folding_time"] = 1.0 / inputs["delta"]

    def compute_partials(self, inputs, J):
        delta = inputs["delta"]
        log_range = 1.0 + np.log(inputs["s0"] / inputs["smin"])

        J["bound", "delta"] = -log_range / delta**2
        J["bound", "s0"] = 1.0 / (inputs["s0"] * delta)
        J["bound", "smin"] = -1.0 / (inputs["smin"] * delta)

        J["e_folding_time", "delta"] = -1.0 / delta**2


class LinearRuntimeBounds(om.ExplicitComponent):
    """Runtime bounds of the (1+1) EA on linear functions of n bits."""

    def setup(self):
        self.add_input("n", DEFAULT_SIZES["n"], desc="number of bits")

        self.add_output("onemax_upper", 1.0, desc="e n (1 + ln(n/2))")
        self.add_output("binval_upper", 1.0, desc="e n (1 + ln((2^n - 1)/2))")
        self.add_output("linear_upper", 1.0, desc="e/(e-2) n ln n")
        self.add_output("linear_lower", 1.0, desc="e n ln n")

        self.declare_partials("*", "n")

    def compute(self, inputs, outputs):
        n = float(inputs["n"][0])
        outputs["onemax_upper"] = E * n * (1.0 + math.log(n / 2.0))
        outputs["binval_upper"] = E * n * (1.0 + binval_log_half_range(n))
        outputs["linear_upper"] = E / (E - 2.0) * n * math.log(n)
        outputs["linear_lower"] = E * n * math.log(n)

    def compute_partials(self, inputs, J):
        n = float(inputs["n"][0])
        ln_n = math.log(n)

        J["onemax_upper", "n"] = E * (2.0 + math.log(n / 2.0))
        # d/dn ln(2^n - 1) = ln 2 / (1 - 2^-n)
        J["binval_upper", "n"] = E * (1.0 + binval_log_half_range(n)
                                      + n * LN2 / (1.0 - 2.0 ** -n))
        J["linear_upper", "n"] = E / (E - 2.0) * (ln_n + 1.0)
        J["linear_lower", "n"] = E * (ln_n + 1.0)


class GraphRuntimeBounds(om.ExplicitComponent):
    """Runtime bounds for spanning trees, shortest paths and Euler tours."""

    def setup(self):
        self.add_input("m", DEFAULT_SIZES["m"], desc="number of edges")
        self.add_input("w_max", DEFAULT_SIZES["w_max"], desc="largest edge weight")
        self.add_input("n_vertices", DEFAULT_SIZES["n_vertices"], desc="number of vertices")

        self.add_output("mst_upper", 1.0, desc="2 e m^2 (1 + ln m + ln w_max)")
        self.add_output("sssp_upper", 1.0, desc="6 n^3 (1 + 2 ln n + ln w_max)")
        self.add_output("euler_upper", 1.0, desc="e m ln m")

        self.declare_partials("mst_upper", ["m", "w_max"])
        self.declare_partials("sssp_upper", ["n_vertices", "w_max"])
        self.declare_partials("euler_upper", "m")

    def compute(self, inputs, outputs):
        m = inputs["m"]
        w = inputs["w_max"]
        n = inputs["n_vertices"]

        outputs["mst_upper"] = 2.0 * E * m**2 * (1.0 + np.log(m) + np.log(w))
        outputs["sssp_upper"] = 6.0 * n**3 * (1.0 + 2.0 * np.log(n) + np.log(w))
        outputs["euler_upper"] = E * m * np.log(m)

    def compute_partials(self, inputs, J):
        m = inputs["m"]
        w = inputs["w_max"]
        n = inputs["n_vertices"]

        J["mst_upper", "m"] = 4.0 * E * m * (1.0 + np.log(m) + np.log(w)) + 2.0 * E * m
        J["mst_upper", "w_max"] = 2.0 * E * m**2 / w

        J["sssp_upper", "n_vertices"] = 18.0 * n**2 * (1.0 + 2.0 * np.log(n) + np.log(w)) + 12.0 * n**2
        J["sssp_upper", "w_max"] = 6.0 * n**3 / w

        J["euler_upper", "m"] = E * (np.log(m) + 1.0)


class RuntimeBounds(om.Group):
    """All size-driven bounds side by side, inputs promoted to the top."""

    def setup(self):
        self.add_subsystem("linear", LinearRuntimeBounds(), promotes=["*"])
        self.add_subsystem("graph", GraphRuntimeBounds(), promotes=["*"])


def bound_table(cases, recorder_path=None):
    """
    Evaluate ``RuntimeBounds`` over a list of size dicts with a DOE driver.

    Missing sizes fall back to DEFAULT_SIZES. Cases are written to a sqlite
    case database (a temporary one unless ``recorder_path`` is given) and
    read back in order; returns one dict of sizes and bounds per case.
    """
    cases = [dict(DEFAULT_SIZES, **case) for case in cases]
    prob = om.Problem(RuntimeBounds(), reports=False)
    for name in DEFAULT_SIZES:
        prob.model.add_design_var(name, lower=1.0)

    doe = [[(name, case[name]) for name in DEFAULT_SIZES] for case in cases]
    prob.driver = om.DOEDriver(om.ListGenerator(doe))
    prob.driver.recording_options["includes"] = ["*"]

    tmpdir = None
    if recorder_path is None:
        tmpdir = tempfile.mkdtemp(prefix="driftlab_")
        recorder_path = os.path.join(tmpdir, "bounds.sql")
    prob.driver.add_recorder(om.SqliteRecorder(recorder_path))

    prob.setup()
    prob.run_driver()
    prob.cleanup()

    outputs = ("onemax_upper", "binval_upper", "linear_upper", "linear_lower",
               "mst_upper", "sssp_upper", "euler_upper")
    reader = om.CaseReader(recorder_path)
    rows = []
    for case_id in reader.list_cases("driver", out_stream=None):
        case = reader.get_case(case_id)
        row = {name: float(case.get_val(name)[0]) for name in DEFAULT_SIZES}
        row.update((name, float(case.get_val(name)[0])) for name in outputs)
        rows.append(row)
    logger.info("evaluated %d bound cases into %s", len(rows), recorder_path)

    if tmpdir is not None:
        os.remove(recorder_path)
        os.rmdir(tmpdir)
    return rows
