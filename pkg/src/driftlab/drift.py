"""
Drift theorems as executable artifacts.

Closed-form additive and multiplicative drift bounds, the expected
hitting-time ("ideal") potential of an absorbing Markov chain, empirical
estimation of conditional drift from potential traces, and synthetic
processes engineered to have an exact multiplicative drift.
"""

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from driftlab.errors import ConfigurationError, EmptyInputError, SingularSystemError
from driftlab.seeding import make_rng
from driftlab.stats import Z95

logger = logging.getLogger(__name__)

ROW_SUM_TOL = 1e-12
RESIDUAL_TOL = 1e-9
DEFAULT_MAX_STATES = 10_000
AUTO_BUCKETS = 50

UNIT_DECREMENT = "unit-decrement"
PROPORTIONAL = "proportional"


@dataclass(frozen=True)
class BoundSpec:
    """Parameters of the multiplicative drift bound."""

    delta: float
    s0: float
    smin: float

    def __post_init__(self):
        if not self.delta > 0:
            raise ConfigurationError("delta must be positive, got %r" % (self.delta,))
        if not self.smin > 0:
            raise ConfigurationError("smin must be positive, got %r" % (self.smin,))
        if not self.s0 >= self.smin:
            raise ConfigurationError("s0=%r is below smin=%r" % (self.s0, self.smin))


def multiplicative_bound(spec):
    """Upper bound (1 + ln(s0/smin)) / delta on the expected hitting time of 0."""
    return (1.0 + math.log(spec.s0 / spec.smin)) / spec.delta


def additive_bound(delta, x0):
    """Upper bound x0 / delta for a process with constant drift delta."""
    if not delta > 0 or not x0 > 0:
        raise ConfigurationError("additive bound needs delta > 0 and x0 > 0")
    return x0 / delta


def expected_weight_decrease_time(spec):
    """Time 1/delta after which E[X] <= s0 exp(-delta t) <= s0/e under multiplicative drift."""
    return 1.0 / spec.delta


def log_rescale(values, smin):
    """
    Map potential values X to Z = 1 + ln(X/smin), keeping 0 at 0.

    Under multiplicative drift delta on X, Z has additive drift at least delta.
    """
    values = np.asarray(values, dtype=float)
    if smin <= 0:
        raise ConfigurationError("smin must be positive")
    out = np.zeros_like(values)
    live = values > 0
    if np.any(values[live] < smin):
        raise ConfigurationError("non-zero value below smin")
    out[live] = 1.0 + np.log(values[live] / smin)
    return out


@dataclass
class AbsorbingChain:
    """Homogeneous absorbing Markov chain on states 0..state_count-1."""

    transition: np.ndarray
    absorbing: frozenset

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
            raise ConfigurationError("transition matrix must be square and non-empty")
        if np.any(P < 0):
            raise ConfigurationError("negative transition probability")
        rows = P.sum(axis=1)
        bad = np.flatnonzero(np.abs(rows - 1.0) > ROW_SUM_TOL)
        if bad.size:
            raise ConfigurationError("rows %s do not sum to 1" % bad.tolist())

        absorbing = frozenset(int(s) for s in self.absorbing)
        if not absorbing:
            raise ConfigurationError("chain has no absorbing state")
        for s in absorbing:
            if not 0 <= s < P.shape[0]:
                raise ConfigurationError("absorbing index %d out of range" % s)
            if P[s, s] != 1.0:
                raise ConfigurationError("absorbing state %d must self-loop with probability 1" % s)

        # backward search from the absorbing set
        reach = np.zeros(P.shape[0], dtype=bool)
        reach[list(absorbing)] = True
        while True:
            grown = reach | (P[:, reach] > 0).any(axis=1)
            if grown.sum() == reach.sum():
                break
            reach = grown
        if not reach.all():
            raise ConfigurationError(
                "no absorbing state reachable from %s" % np.flatnonzero(~reach).tolist())

        self.transition = P
        self.absorbing = absorbing

    @property
    def state_count(self):
        return self.transition.shape[0]

    @property
    def transient(self):
        mask = np.ones(self.state_count, dtype=bool)
        mask[list(self.absorbing)] = False
        return np.flatnonzero(mask)

    @classmethod
    def from_text(cls, text):
        """
        Parse the chain text format: state count, absorbing indices, then
        one row of probabilities per state.
        """
        lines = [ln.strip() for ln in text.strip().splitlines()]
        try:
            k = int(lines[0])
            absorbing = [int(tok) for tok in lines[1].split()]
            rows = [[float(tok) for tok in ln.split()] for ln in lines[2:2 + k]]
        except (IndexError, ValueError) as err:
            raise ConfigurationError("malformed chain file: %s" % err)
        if len(rows) != k or any(len(r) != k for r in rows):
            raise ConfigurationError("expected %d rows of %d probabilities" % (k, k))
        return cls(np.array(rows), frozenset(absorbing))

    def to_text(self):
        lines = [str(self.state_count), " ".join(str(s) for s in sorted(self.absorbing))]
        lines.extend(" ".join("%.17g" % p for p in row) for row in self.transition)
        return "\n".join(lines) + "\n"


def load_chain(path):
    with open(path) as stream:
        return AbsorbingChain.from_text(stream.read())


def random_chain(state_count, rng, absorbing_count=1, stay=0.3):
    """
    Dense random chain whose last ``absorbing_count`` states absorb.

    Transient rows are Dirichlet draws mixed with a self-loop of weight ``stay``.
    """
    rng = make_rng(rng)
    if not 1 <= absorbing_count < state_count:
        raise ConfigurationError("need at least one absorbing and one transient state")
    P = rng.dirichlet(np.ones(state_count), size=state_count)
    P = (1.0 - stay) * P + stay * np.eye(state_count)
    absorbing = range(state_count - absorbing_count, state_count)
    for s in absorbing:
        P[s] = 0.0
        P[s, s] = 1.0
    P /= P.sum(axis=1, keepdims=True)
    for s in absorbing:
        P[s, s] = 1.0
    return AbsorbingChain(P, frozenset(absorbing))


def ideal_potential(chain, max_states=DEFAULT_MAX_STATES):
    """
    Expected hitting time of the absorbing set from every state.

    Solves (I - Q) mu = 1 on the transient states with one step of iterative
    refinement; raises SingularSystemError unless max |(I - Q) mu - 1| <= 1e-9.
    """
    if chain.state_count > max_states:
        raise ConfigurationError("chain has %d states, cap is %d" % (chain.state_count, max_states))
    mu = np.zeros(chain.state_count)
    T = chain.transient
    if T.size == 0:
        return mu

    A = np.eye(T.size) - chain.transition[np.ix_(T, T)]
    b = np.ones(T.size)
    with warnings.catch_warnings():
        warnings.simplefilter("error", linalg.LinAlgWarning)
        try:
            x = linalg.solve(A, b)
            x += linalg.solve(A, b - A @ x)
        except (np.linalg.LinAlgError, linalg.LinAlgWarning) as err:
            raise SingularSystemError("hitting-time system is singular: %s" % err)

    residual = float(np.max(np.abs(A @ x - b)))
    if not np.all(np.isfinite(x)) or residual > RESIDUAL_TOL:
        raise SingularSystemError("residual %.3g exceeds tolerance" % residual)
    logger.debug("solved %d-state hitting system, residual %.3g", T.size, residual)
    mu[T] = x
    return mu


def exact_chain_drift(chain, potential):
    """Per-state one-step drift potential[s] - E[potential(next) | s]."""
    potential = np.asarray(potential, dtype=float)
    if potential.shape != (chain.state_count,):
        raise ConfigurationError("potential has %s entries, chain has %d states"
                                 % (potential.shape, chain.state_count))
    return potential - chain.transition @ potential


def verify_unit_drift(chain, potential):
    """Max deviation of the drift of ``potential`` from 1 over the transient states."""
    drift = exact_chain_drift(chain, potential)
    T = chain.transient
    if T.size == 0:
        return 0.0
    return float(np.max(np.abs(drift[T] - 1.0)))


def sample_hitting_times(chain, start, runs, rng, max_steps=10**7):
    """Monte-Carlo absorption times from ``start``, all runs advanced in lockstep."""
    rng = make_rng(rng)
    cumulative = np.cumsum(chain.transition, axis=1)
    cumulative[:, -1] = 1.0
    is_absorbing = np.zeros(chain.state_count, dtype=bool)
    is_absorbing[list(chain.absorbing)] = True

    states = np.full(runs, int(start))
    times = np.zeros(runs, dtype=np.int64)
    active = np.flatnonzero(~is_absorbing[states])
    steps = 0
    while active.size and steps < max_steps:
        u = rng.random(active.size)
        rows = cumulative[states[active]]
        states[active] = (u[:, None] >= rows).sum(axis=1)
        times[active] += 1
        active = active[~is_absorbing[states[active]]]
        steps += 1
    if active.size:
        logger.warning("%d chain runs hit the step cap %d", active.size, max_steps)
    return times


def sample_chain_path(chain, start, rng, max_steps=10**6):
    """One realization of the chain until absorption, as a list of states."""
    rng = make_rng(rng)
    path = [int(start)]
    state = int(start)
    for _ in range(max_steps):
        if state in chain.absorbing:
            break
        state = int(rng.choice(chain.state_count, p=chain.transition[state]))
        path.append(state)
    return path


@dataclass(frozen=True)
class PotentialTrace:
    """Realization of a potential process; ends at 0 unless capped."""

    values: np.ndarray
    capped: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ConfigurationError("trace must be a non-empty sequence")
        if np.any(values < 0):
            raise ConfigurationError("trace has negative potential values")
        if not self.capped:
            if values[-1] != 0:
                raise ConfigurationError("uncapped trace must end at 0")
            if np.any(values[:-1] == 0):
                raise ConfigurationError("trace reaches 0 before its end")
        object.__setattr__(self, "values", values)

    @property
    def hitting_time(self):
        """Number of transitions to absorption, None when capped."""
        return None if self.capped else self.values.size - 1

    def __len__(self):
        return self.values.size


@dataclass(frozen=True)
class DriftEstimate:
    """Sample estimate of E[X(t) - X(t+1) | X(t) = level]."""

    level: float
    mean_decrease: float
    sample_count: int
    ci_halfwidth: float

    @property
    def ratio(self):
        return self.mean_decrease / self.level if self.level > 0 else math.inf


def _transitions(traces):
    pre_parts = []
    post_parts = []
    for trace in traces:
        v = trace.values
        if v.size < 2:
            continue
        pre, post = v[:-1], v[1:]
        live = pre > 0
        pre_parts.append(pre[live])
        post_parts.append(post[live])
    if not pre_parts:
        return np.empty(0), np.empty(0)
    return np.concatenate(pre_parts), np.concatenate(post_parts)


def _group_estimates(pre, decrease, keys):
    uniq, inverse = np.unique(keys, return_inverse=True)
    counts = np.bincount(inverse)
    means = np.bincount(inverse, weights=decrease) / counts
    levels = np.bincount(inverse, weights=pre) / counts
    sq = np.bincount(inverse, weights=(decrease - means[inverse]) ** 2)
    estimates = []
    for b in range(uniq.size):
        n = int(counts[b])
        sd = math.sqrt(sq[b] / (n - 1)) if n > 1 else 0.0
        half = Z95 * sd / math.sqrt(n) if n > 1 else 0.0
        estimates.append(DriftEstimate(float(levels[b]), float(means[b]), n, half))
    return estimates


def estimate_conditional_drift(traces, bucket_width=None, exact_levels=None):
    """
    Estimate conditional one-step drift from potential traces.

    Transitions out of level 0 are ignored. With exact levels each distinct
    pre-step value is its own group; otherwise pre-step values are grouped
    into buckets of ``bucket_width`` and the reported level is the mean
    pre-step value inside the bucket. By default exact levels are used when
    every observed value is an integer, else width = range/50.
    """
    traces = list(traces)
    if not traces:
        raise EmptyInputError("no traces given")
    pre, post = _transitions(traces)
    if pre.size == 0:
        raise EmptyInputError("traces contain no transition before absorption")
    decrease = pre - post

    if exact_levels is None:
        exact_levels = bucket_width is None and bool(np.all(pre == np.round(pre)))
    if exact_levels:
        return _group_estimates(pre, decrease, pre)

    lo, hi = float(pre.min()), float(pre.max())
    if bucket_width is None:
        bucket_width = (hi - lo) / AUTO_BUCKETS or 1.0
    if not bucket_width > 0:
        raise ConfigurationError("bucket width must be positive")
    keys = np.floor((pre - lo) / bucket_width).astype(np.int64)
    return _group_estimates(pre, decrease, keys)


def pooled_drift_estimates(traces, min_samples):
    """
    Exact-level estimates where a level has ``min_samples`` transitions.

    Sparse levels are merged with their sparse neighbours, in level order,
    into buckets of at least ``min_samples`` transitions; a short remainder
    joins the last bucket.
    """
    exact = estimate_conditional_drift(traces, exact_levels=True)
    counts = np.array([e.sample_count for e in exact])
    sparse = np.flatnonzero(counts < min_samples)
    if not sparse.size:
        return exact

    # exact estimates come in np.unique order of the pre-step values
    bucket_of = np.full(counts.size, -1, dtype=np.int64)
    bucket, filled = 0, 0
    for i in sparse:
        bucket_of[i] = bucket
        filled += counts[i]
        if filled >= min_samples:
            bucket, filled = bucket + 1, 0
    if filled and bucket > 0:
        bucket_of[bucket_of == bucket] = bucket - 1

    pre, post = _transitions(traces)
    index = np.searchsorted(np.unique(pre), pre)
    keep = bucket_of[index] >= 0
    pooled = _group_estimates(pre[keep], (pre - post)[keep], bucket_of[index[keep]])
    dense = [exact[i] for i in np.flatnonzero(counts >= min_samples)]
    return sorted(dense + pooled, key=lambda e: e.level)


@dataclass
class DriftCheckReport:
    """Outcome of comparing drift estimates with a required drift per level."""

    passed: bool
    worst_level: float
    worst_ratio: float
    failures: list = field(default_factory=list)
    checked: int = 0
    worst_slack_ratio: float = math.nan


def check_multiplicative_condition(estimates, delta, slack=2.0, min_samples=1):
    """
    Check mean_decrease + slack*ci >= delta*level for every estimate with at
    least ``min_samples`` transitions.

    Fails only on a strict violation. The worst level is the one with the
    smallest mean_decrease/level. The slack ratio is the smallest
    (mean_decrease + slack*ci)/level.
    """
    estimates = [e for e in estimates if e.level > 0 and e.sample_count >= min_samples]
    if not estimates:
        raise EmptyInputError("no estimates with %d or more samples to check" % min_samples)
    failures = [e for e in estimates
                if e.mean_decrease + slack * e.ci_halfwidth < delta * e.level]
    worst = min(estimates, key=lambda e: e.ratio)
    slack_ratio = min((e.mean_decrease + slack * e.ci_halfwidth) / e.level for e in estimates)
    return DriftCheckReport(not failures, worst.level, worst.ratio, failures, len(estimates),
                            float(slack_ratio))


def synthetic_multiplicative_process(s0, delta, rng, mode=UNIT_DECREMENT, smin=1.0):
    """
    A process with exact multiplicative drift ``delta``.

    unit-decrement: integer state s drops by 1 with probability delta*s.
    proportional: s <- s*(1-delta), absorbed at 0 once below ``smin``.
    """
    if mode == UNIT_DECREMENT:
        s0 = int(s0)
        if s0 < 1 or not 0 < delta or delta * s0 > 1:
            raise ConfigurationError("unit-decrement needs s0 >= 1 and 0 < delta*s0 <= 1")
        rng = make_rng(rng)
        levels = np.arange(s0, 0, -1)
        waits = rng.geometric(delta * levels)
        values = np.append(np.repeat(levels, waits), 0).astype(float)
        return PotentialTrace(values)

    if mode == PROPORTIONAL:
        if not 0 < delta < 1 or not s0 >= smin > 0:
            raise ConfigurationError("proportional mode needs 0 < delta < 1 and s0 >= smin > 0")
        values = [float(s0)]
        s = float(s0)
        while True:
            s *= 1.0 - delta
            if s < smin:
                values.append(0.0)
                break
            values.append(s)
        return PotentialTrace(np.array(values))

    raise ConfigurationError("unknown process mode %r" % (mode,))


def synthetic_hitting_times(s0, delta, runs, rng):
    """Absorption times of ``runs`` unit-decrement processes (sum of geometric waits)."""
    rng = make_rng(rng)
    if s0 < 1 or not 0 < delta or delta * s0 > 1:
        raise ConfigurationError("unit-decrement needs s0 >= 1 and 0 < delta*s0 <= 1")
    p = delta * np.arange(1, int(s0) + 1)
    total = np.zeros(runs, dtype=np.int64)
    for block in np.array_split(p, max(1, p.size // 256)):
        total += rng.geometric(block, size=(runs, block.size)).sum(axis=1)
    return total


def harmonic_expected_time(s0, delta):
    """Exact expected absorption time sum_{k=1}^{s0} 1/(delta*k) of the unit-decrement process."""
    return math.fsum(1.0 / (delta * k) for k in range(1, int(s0) + 1))


def mean_path_below_geometric(traces, s0, delta, horizon, slack=3.0):
    """
    Check E[X(t)] <= s0*(1-delta)^t for t < horizon on equal-start traces.

    Traces are padded with 0 after absorption. Returns the list of t at
    which the sample mean exceeds the envelope by more than ``slack``
    standard errors.
    """
    padded = np.zeros((len(traces), horizon))
    for i, trace in enumerate(traces):
        v = trace.values[:horizon]
        padded[i, :v.size] = v
    mean = padded.mean(axis=0)
    se = padded.std(axis=0, ddof=1) / math.sqrt(len(traces)) if len(traces) > 1 else 0.0
    envelope = s0 * (1.0 - delta) ** np.arange(horizon)
    return np.flatnonzero(mean - slack * se > envelope).tolist()
