"""
Linear pseudo-Boolean functions, potentials, and their drift.

Linear functions are kept in the monotone normalization (positive weights in
non-decreasing order), so the all-zeros string is the unique optimum with
value 0. Exact drift is computed by enumerating all 2**n mutation masks;
Monte-Carlo checks run the (1+1) EA from ``driftlab.ea``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from driftlab.drift import AbsorbingChain, estimate_conditional_drift, ideal_potential
from driftlab.ea import FitnessOracle, RunConfig, advance_lockstep, as_bitstring, run_batch
from driftlab.errors import ConfigurationError
from driftlab.seeding import make_rng
from driftlab.stats import Z95

logger = logging.getLogger(__name__)

E = math.e
MAX_EXACT_N = 20
MAX_EXHAUSTIVE_N = 12
MIN_DRIFT_CHECK_REPS = 1000
MIN_ORDERING_REPS = 10**4
MAX_LEVEL_N = 14
ENUMERATION_TOL = 1e-12


class LinearFunction(FitnessOracle):
    """f(x) = sum w_i x_i with 0 < w_1 <= ... <= w_n."""

    def __init__(self, weights, description="linear"):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ConfigurationError("weights must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ConfigurationError("weights must be finite and strictly positive")
        super(LinearFunction, self).__init__(w.size, 0.0)
        self.weights = np.sort(w)
        self.description = description

    def evaluate(self, x):
        if len(x) != self.n:
            raise ConfigurationError("point has %d bits, function has %d" % (len(x), self.n))
        return float(self.weights @ np.asarray(x, dtype=float))

    def offspring_value(self, x, fx, flips):
        # signed sum over the flipped positions only
        change = float(self.weights[flips] @ (1 - 2 * x[flips]).astype(float))
        return fx + change, change

    def is_optimal(self, x, fx):
        return not x.any()

    def scaled(self, c):
        return LinearFunction(c * self.weights, "%g*%s" % (c, self.description))

    def to_text(self):
        return "%d\n%s\n" % (self.n, "\n".join("%.17g" % w for w in self.weights))

    @classmethod
    def from_text(cls, text, description="linear"):
        tokens = text.split()
        try:
            n = int(tokens[0])
            weights = [float(tok) for tok in tokens[1:]]
        except (IndexError, ValueError) as err:
            raise ConfigurationError("malformed weight file: %s" % err)
        if len(weights) != n:
            raise ConfigurationError("expected %d weights, found %d" % (n, len(weights)))
        return cls(weights, description)

    def save(self, path):
        with open(path, "w") as stream:
            stream.write(self.to_text())

    @classmethod
    def load(cls, path):
        with open(path) as stream:
            return cls.from_text(stream.read(), "file:%s" % path)


def onemax(n):
    return LinearFunction(np.ones(n), "onemax")


def binval(n):
    return LinearFunction(2.0 ** np.arange(n), "binval")


def random_linear(n, rng):
    """Weights drawn uniformly from (0, 1], sorted ascending."""
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    rng = make_rng(rng)
    # 1 - U with U in [0, 1) lies in (0, 1]
    return LinearFunction(1.0 - rng.random(n), "random")


FUNCTIONS = {
    "onemax": onemax,
    "binval": binval,
}


def make_function(name, n, rng=None):
    """Function by CLI name: onemax, binval, random or file:<path>."""
    if name in FUNCTIONS:
        return FUNCTIONS[name](n)
    if name == "random":
        return random_linear(n, rng if rng is not None else 0)
    if name.startswith("file:"):
        f = LinearFunction.load(name[5:])
        if f.n != n:
            raise ConfigurationError("weight file has n=%d, expected %d" % (f.n, n))
        return f
    raise ConfigurationError("unknown function %r" % (name,))


def eval_linear(f, x):
    return f.evaluate(x)


WEIGHTED = "weighted"
DROSTE = "droste"
HEYAO = "heyao"
ONEMAX = "onemax"
IDENTITY = "identity"
POTENTIAL_KINDS = (WEIGHTED, DROSTE, HEYAO, ONEMAX, IDENTITY)


class Potential(object):
    """
    Non-negative map on bit strings that is 0 exactly at the all-zeros string.

    weighted:  sum (1 + i/n) x_i
    droste:    weight 1 on the lower half, 2 on the upper half
    heyao:     ln(1 + lower half + c * upper half), 1 < c <= 2
    onemax:    number of one-bits
    identity:  the linear function itself
    """

    def __init__(self, kind, n, c=2.0, f=None):
        if kind not in POTENTIAL_KINDS:
            raise ConfigurationError("unknown potential %r" % (kind,))
        self.kind = kind
        self.n = int(n)
        self.c = float(c)
        half = self.n // 2
        if kind == WEIGHTED:
            coef = 1.0 + np.arange(1, n + 1) / float(n)
        elif kind == DROSTE:
            coef = np.where(np.arange(n) < half, 1.0, 2.0)
        elif kind == HEYAO:
            if not 1.0 < self.c <= 2.0:
                raise ConfigurationError("He-Yao constant c must lie in (1, 2], got %r" % (c,))
            coef = np.where(np.arange(n) < half, 1.0, self.c)
        elif kind == ONEMAX:
            coef = np.ones(n)
        else:
            if f is None or f.n != n:
                raise ConfigurationError("identity potential needs a function on %d bits" % n)
            coef = f.weights.copy()
        self.coefficients = coef

    @classmethod
    def by_name(cls, name, n, f=None):
        """Parse 'weighted', 'droste', 'heyao[:c]', 'onemax' or 'identity'."""
        kind, _, arg = name.partition(":")
        if kind == HEYAO and arg:
            return cls(kind, n, c=float(arg))
        return cls(kind, n, f=f)

    def values(self, X):
        """Potential of every row of a 0/1 matrix."""
        linear = np.asarray(X, dtype=float) @ self.coefficients
        return np.log1p(linear) if self.kind == HEYAO else linear

    def __call__(self, x):
        if len(x) != self.n:
            raise ConfigurationError("point has %d bits, potential has %d" % (len(x), self.n))
        return float(self.values(np.asarray(x)[None, :])[0])

    def __repr__(self):
        return "<Potential %s n=%d>" % (self.kind, self.n)


def eval_potential(g, x):
    return g(x)


def all_masks(n):
    """All 2**n bit strings as rows, row index = integer value (bit 0 lowest)."""
    return ((np.arange(2 ** n)[:, None] >> np.arange(n)) & 1).astype(np.int8)


def _mask_probabilities(masks):
    n = masks.shape[1]
    flips = masks.sum(axis=1)
    p = 1.0 / n
    return p ** flips * (1.0 - p) ** (n - flips)


def _pointwise_drift(f, g, x, masks, probs):
    # selection uses the signed change over flipped bits, as the EA does
    change = (masks * (1 - 2 * x)) @ f.weights
    accepted = change <= 0
    Y = masks ^ x
    gy = g.values(Y[accepted])
    gx = g(x)
    return math.fsum(probs[accepted] * (gx - gy))


def exact_pointwise_drift(f, g, x):
    """
    Exact E[g(x) - g(x')] for one EA iteration from ``x``, summing over all
    2**n mutation masks with compensated summation.
    """
    x = as_bitstring(x)
    n = x.size
    if n > MAX_EXACT_N:
        raise ConfigurationError("exact drift enumerates 2**n masks; n=%d exceeds %d" % (n, MAX_EXACT_N))
    if f.n != n or g.n != n:
        raise ConfigurationError("function, potential and point lengths differ")
    masks = all_masks(n)
    return _pointwise_drift(f, g, x, masks, _mask_probabilities(masks))


@dataclass
class ExhaustiveDriftTable:
    """Exact drift at every non-optimal point of {0,1}^n."""

    points: np.ndarray
    potential: np.ndarray
    drift: np.ndarray

    @property
    def ratio(self):
        return self.drift / self.potential


def exhaustive_drift_table(f, g):
    n = f.n
    if n > MAX_EXHAUSTIVE_N:
        raise ConfigurationError("exhaustive tables need n <= %d" % MAX_EXHAUSTIVE_N)
    masks = all_masks(n)
    probs = _mask_probabilities(masks)
    points = masks[1:]
    drift = np.array([_pointwise_drift(f, g, x, masks, probs) for x in points])
    return ExhaustiveDriftTable(points, g.values(points), drift)


@dataclass
class ExhaustiveReport:
    passed: bool
    worst_point: np.ndarray
    worst_ratio: float
    table: ExhaustiveDriftTable = None


def weighted_drift_check(f):
    """
    Check drift >= g(x)/(4 e n) for the weighted potential at every non-zero x.

    The reported ratio is min over x of drift * 4 e n / g(x); the check
    passes iff it is at least 1.
    """
    n = f.n
    g = Potential(WEIGHTED, n)
    table = exhaustive_drift_table(f, g)
    scaled = table.drift * 4.0 * E * n / table.potential
    worst = int(np.argmin(scaled))
    passed = bool(np.all(table.drift >= table.potential / (4.0 * E * n)))
    return ExhaustiveReport(passed, table.points[worst], float(scaled[worst]), table)


def heyao_additive_drift(f, c=2.0):
    """min over non-zero x of n * drift of the logarithmic potential."""
    table = exhaustive_drift_table(f, Potential(HEYAO, f.n, c=c))
    return float(f.n * table.drift.min())


def level_probability(n, k, j):
    """
    Probability that mutating a point with k one-bits yields exactly j one-bits.

    Sums over i, the number of zero-bits flipped to one: j - i of the k ones
    survive, so k - j + 2i bits flip in total.
    """
    if not 0 <= k <= n or not 0 <= j <= n:
        raise ConfigurationError("need 0 <= k, j <= n (n=%d, k=%d, j=%d)" % (n, k, j))
    p = 1.0 / n
    q = 1.0 - p
    terms = []
    for i in range(max(0, j - k), min(j, n - k) + 1):
        flips = k - j + 2 * i
        terms.append(math.comb(k, j - i) * math.comb(n - k, i) * p ** flips * q ** (n - flips))
    return math.fsum(terms)


@dataclass
class LevelProbabilityTable:
    """entries[k, j] = P(offspring of a k-ones parent has j ones)."""

    n: int
    entries: np.ndarray

    def __post_init__(self):
        rows = self.entries.sum(axis=1)
        if np.any(np.abs(rows - 1.0) > ENUMERATION_TOL):
            raise ConfigurationError("level probability rows do not sum to 1")


def level_probability_table(n):
    entries = np.array([[level_probability(n, k, j) for j in range(n + 1)] for k in range(n + 1)])
    return LevelProbabilityTable(n, entries)


def level_probability_row(n, k):
    """Row k by convolution of Binomial(k, 1-1/n) kept ones with Binomial(n-k, 1/n) new ones."""
    p = 1.0 / n
    kept = stats.binom.pmf(np.arange(k + 1), k, 1.0 - p)
    gained = stats.binom.pmf(np.arange(n - k + 1), n - k, p)
    return np.convolve(kept, gained)


def enumerate_level_probabilities(n):
    """Level probabilities by full enumeration of mutation masks (n <= 12)."""
    if n > MAX_EXHAUSTIVE_N:
        raise ConfigurationError("enumeration needs n <= %d" % MAX_EXHAUSTIVE_N)
    masks = all_masks(n)
    probs = _mask_probabilities(masks)
    entries = np.zeros((n + 1, n + 1))
    for k in range(n + 1):
        x = np.zeros(n, dtype=np.int8)
        x[:k] = 1
        ones = (masks ^ x).sum(axis=1)
        for j in range(n + 1):
            entries[k, j] = math.fsum(probs[ones == j])
    return entries


@dataclass
class MonotonicityReport:
    passed: bool
    violations: list = field(default_factory=list)
    max_enumeration_error: float = None


def level_monotonicity_check(n):
    """
    Check P_k(j) >= P_k'(j) for all 1 <= k <= k' <= n and j <= k-1, and
    cross-check the formula against enumeration when n <= 12.
    """
    if not 1 <= n <= MAX_LEVEL_N:
        raise ConfigurationError("monotonicity check needs 1 <= n <= %d" % MAX_LEVEL_N)
    table = level_probability_table(n).entries
    violations = []
    for k in range(1, n + 1):
        for k2 in range(k + 1, n + 1):
            for j in range(k):
                # equality occurs (e.g. n = 2); allow rounding only
                if table[k, j] < table[k2, j] - 1e-15:
                    violations.append((k, k2, j, table[k, j], table[k2, j]))
    error = None
    if n <= MAX_EXHAUSTIVE_N:
        error = float(np.max(np.abs(table - enumerate_level_probabilities(n))))
    passed = not violations and (error is None or error <= ENUMERATION_TOL)
    return MonotonicityReport(passed, violations, error)


def onemax_level_chain(n):
    """Absorbing chain on OneMax levels 0..n under the (1+1) EA."""
    P = np.zeros((n + 1, n + 1))
    P[0, 0] = 1.0
    for k in range(1, n + 1):
        row = level_probability_row(n, k)
        P[k, :k] = row[:k]
        P[k, k] = 1.0 - math.fsum(row[:k])
    return AbsorbingChain(P, frozenset([0]))


def exact_onemax_times(n):
    """Expected OneMax optimization time from each level k = 0..n."""
    return ideal_potential(onemax_level_chain(n))


def exact_onemax_runtime(n):
    """Expected OneMax optimization time from a uniformly random start."""
    mu = exact_onemax_times(n)
    weights = stats.binom.pmf(np.arange(n + 1), n, 0.5)
    return math.fsum(weights * mu)


@dataclass
class LevelCheck:
    level: float
    samples: int
    mean: float
    ci_halfwidth: float
    required: float
    status: str


@dataclass
class LevelCheckReport:
    passed: bool
    levels: list

    @property
    def tested(self):
        return [lc for lc in self.levels if lc.status != "untested"]


def onemax_drift_check(f, reps, seed=42, min_samples=500, workers=1):
    """
    Monte-Carlo check of E[OneMax drift | OneMax = k] >= (e-2) k / (e n).

    Transitions are pooled over all iterations of ``reps`` runs. A level
    with fewer than ``min_samples`` transitions is reported as untested.
    """
    if reps < MIN_DRIFT_CHECK_REPS:
        raise ConfigurationError("OneMax drift check needs reps >= %d, got %d" % (MIN_DRIFT_CHECK_REPS, reps))
    n = f.n
    config = RunConfig(n=n, seed=seed, record_potential=Potential(ONEMAX, n))
    batch = run_batch(f, config, reps, workers=workers)
    traces = [r.trace for r in batch.records]
    estimates = estimate_conditional_drift(traces, exact_levels=True)
    levels = []
    for est in estimates:
        required = (E - 2.0) * est.level / (E * n)
        if est.sample_count < min_samples:
            status = "untested"
        elif est.mean_decrease + 2.0 * est.ci_halfwidth < required:
            status = "fail"
        else:
            status = "pass"
        levels.append(LevelCheck(est.level, est.sample_count, est.mean_decrease,
                                 est.ci_halfwidth, required, status))
    passed = all(lc.status != "fail" for lc in levels)
    if not passed:
        logger.warning("OneMax drift below (e-2)k/(en) on %s", f.description)
    return LevelCheckReport(passed, levels)


@dataclass
class OrderingReport:
    passed: bool
    probabilities: np.ndarray
    ci_halfwidths: np.ndarray
    violations: list = field(default_factory=list)


def bit_zero_ordering_check(f, t, reps, seed=42):
    """
    Estimate p_i = P(x_i = 0 after t iterations) and check p_i <= p_{i+1}
    up to two combined CI half-widths.
    """
    if reps < MIN_ORDERING_REPS:
        raise ConfigurationError("bit ordering check needs reps >= %d, got %d" % (MIN_ORDERING_REPS, reps))
    if np.any(np.diff(f.weights) <= 0):
        raise ConfigurationError("bit ordering check needs strictly increasing weights")
    X = advance_lockstep(f.weights, t, reps, make_rng(seed))
    p = 1.0 - X.mean(axis=0)
    half = Z95 * np.sqrt(p * (1.0 - p) / reps)
    violations = [i for i in range(f.n - 1)
                  if p[i] - p[i + 1] > 2.0 * (half[i] + half[i + 1])]
    return OrderingReport(not violations, p, half, violations)


def binval_log_half_range(n):
    # ln((2**n - 1)/2) without overflow
    return n * math.log(2.0) + math.log1p(-2.0 ** -n) - math.log(2.0)


BOUND_CATALOG = {
    "onemax_upper": (lambda n: E * n * (1.0 + math.log(n / 2.0)), False),
    "binval_upper": (lambda n: E * n * (1.0 + binval_log_half_range(n)), False),
    "linear_upper_139": (lambda n: E / (E - 2.0) * n * math.log(n), True),
    "linear_upper_202": (lambda n: 2.02 * E * n * math.log(n), True),
    "onemax_lower_asymptotic": (lambda n: E * n * math.log(n), True),
    "linear_lower_asymptotic": (lambda n: E * n * math.log(n), True),
}


def bound_catalog(name, n):
    """Named runtime bound at problem size ``n``."""
    try:
        formula, _ = BOUND_CATALOG[name]
    except KeyError:
        raise ConfigurationError("unknown bound %r; choose from %s" % (name, sorted(BOUND_CATALOG)))
    return formula(n)


def is_asymptotic(name):
    return BOUND_CATALOG[name][1]
