"""
The (1+1) evolutionary algorithm for minimization.

Uniform initialization, standard bit mutation with rate 1/n, selection that
accepts ties, single runs with optional potential recording, and batches of
independent runs with per-repetition seeds derived from a master seed.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import openmdao.api as om

from driftlab.drift import PotentialTrace
from driftlab.errors import ConfigurationError
from driftlab.seeding import child_seed, make_rng
from driftlab.stats import summarize

logger = logging.getLogger(__name__)

BIT_DTYPE = np.int8
UNIFORM = "uniform"


def as_bitstring(bits):
    """Validate and copy a 0/1 sequence into the bit string representation."""
    x = np.array(bits, dtype=BIT_DTYPE)
    if x.ndim != 1 or x.size == 0:
        raise ConfigurationError("bit string must be a non-empty 1-d sequence")
    if np.any((x != 0) & (x != 1)):
        raise ConfigurationError("bit string entries must be 0 or 1")
    return x


def random_bitstring(n, rng):
    return make_rng(rng).integers(0, 2, size=n, dtype=BIT_DTYPE)


class FitnessOracle(object):
    """
    Black-box function to be minimized over bit strings of length ``n``.

    Subclasses implement ``evaluate``. ``offspring_value`` and ``is_optimal``
    may be overridden when a function knows a cheaper exact answer.
    """

    description = "fitness"

    def __init__(self, n, optimum_value):
        self.n = int(n)
        self.optimum_value = optimum_value

    def evaluate(self, x):
        raise NotImplementedError()

    def __call__(self, x):
        return self.evaluate(x)

    def offspring_value(self, x, fx, flips):
        """Return (f(y), f(y) - f(x)) for y = x with positions ``flips`` inverted."""
        y = x.copy()
        y[flips] ^= 1
        fy = self.evaluate(y)
        return fy, fy - fx

    def is_optimal(self, x, fx):
        return fx <= self.optimum_value

    def __repr__(self):
        return "<%s n=%d>" % (self.description, self.n)


def default_max_iters(n):
    """ceil(100 e n ln(n+2)), far above the expected time on linear landscapes."""
    return int(math.ceil(100.0 * math.e * n * math.log(n + 2)))


def _check_init(name, value):
    if isinstance(value, str):
        if value != UNIFORM:
            raise ValueError("%s must be '%s' or an explicit bit string" % (name, UNIFORM))
    elif value is not None:
        as_bitstring(value)


class RunConfig(om.OptionsDictionary):
    """Options of a single (1+1) EA run."""

    def __init__(self, **kwargs):
        super(RunConfig, self).__init__(parent_name="RunConfig")
        self.declare("n", types=int, lower=1, desc="length of the search point")
        self.declare("seed", types=int, default=42, lower=0, upper=2**64 - 1,
                     desc="seed of the run's random stream")
        self.declare("max_iters", types=int, default=None, allow_none=True, lower=1,
                     desc="iteration cap; defaults to ceil(100 e n ln(n+2))")
        self.declare("record_potential", default=None, allow_none=True,
                     desc="callable mapping a search point to a non-negative value")
        self.declare("record_stride", types=int, default=1, lower=1,
                     desc="record the potential every this many iterations")
        self.declare("init", default=UNIFORM, check_valid=_check_init,
                     desc="'uniform' or an explicit initial bit string")
        self.update(kwargs)

    @property
    def iteration_cap(self):
        cap = self["max_iters"]
        return default_max_iters(self["n"]) if cap is None else cap

    def with_seed(self, seed):
        clone = RunConfig()
        for name in ("n", "max_iters", "record_potential", "record_stride", "init"):
            clone[name] = self[name]
        clone["seed"] = seed
        return clone


@dataclass
class RunRecord:
    """Result of one run; ``T`` is the iteration count at stop (the cap when capped)."""

    T: int
    evaluations: int
    final_point: np.ndarray
    final_value: float
    capped: bool = False
    trace: PotentialTrace = None
    seed: int = None


def mutate(x, rng):
    """
    Standard bit mutation: every bit flips independently with probability 1/n.

    The flip count is drawn from Binomial(n, 1/n) and positions uniformly
    without replacement, which is the same joint distribution.
    """
    rng = make_rng(rng)
    n = x.size
    y = x.copy()
    k = rng.binomial(n, 1.0 / n)
    if k:
        y[rng.choice(n, size=k, replace=False)] ^= 1
    return y


def _advance(x, fx, f, rng, k):
    """One selection step given flip count ``k``; returns (x, fx, accepted)."""
    if k == 0:
        return x, fx, True
    flips = rng.choice(x.size, size=k, replace=False)
    fy, change = f.offspring_value(x, fx, flips)
    if change <= 0:
        y = x.copy()
        y[flips] ^= 1
        return y, fy, True
    return x, fx, False


def step(x, f, rng):
    """One iteration: mutate, keep the offspring if its fitness is not worse."""
    rng = make_rng(rng)
    n = x.size
    k = int(rng.binomial(n, 1.0 / n))
    return _advance(x, f.evaluate(x), f, rng, k)[0]


def run(f, config):
    """
    Run the (1+1) EA on ``f`` until the optimum is found or the cap is hit.

    T counts iterations (T = 0 when the initial point is optimal);
    evaluations = T + 1.
    """
    n = config["n"]
    if f.n != n:
        raise ConfigurationError("oracle is defined on %d bits, config asks for %d" % (f.n, n))
    rng = make_rng(config["seed"])
    init = config["init"]
    x = random_bitstring(n, rng) if isinstance(init, str) else as_bitstring(init)
    if x.size != n:
        raise ConfigurationError("initial point has %d bits, expected %d" % (x.size, n))

    cap = config.iteration_cap
    potential = config["record_potential"]
    stride = config["record_stride"]
    recorded = [potential(x)] if potential is not None else None

    fx = f.evaluate(x)
    evaluations = 1
    t = 0
    p = 1.0 / n
    block = np.empty(0, dtype=np.int64)
    pos = 0
    while not f.is_optimal(x, fx) and t < cap:
        if pos == block.size:
            block = rng.binomial(n, p, size=1024)
            pos = 0
        x, fx, _ = _advance(x, fx, f, rng, int(block[pos]))
        pos += 1
        t += 1
        evaluations += 1
        if recorded is not None and t % stride == 0:
            recorded.append(potential(x))

    capped = not f.is_optimal(x, fx)
    if recorded is not None and t % stride != 0:
        recorded.append(potential(x))
    trace = None
    if recorded is not None:
        trace = PotentialTrace(np.array(recorded, dtype=float), capped=capped)
    if capped:
        logger.debug("run with seed %d capped after %d iterations", config["seed"], t)
    return RunRecord(t, evaluations, x, f.evaluate(x), capped, trace, config["seed"])


@dataclass
class BatchSummary:
    """Statistics over the uncapped runs of a batch."""

    records: list
    mean: float = math.nan
    sd: float = math.nan
    ci_halfwidth: float = math.nan
    median: float = math.nan
    capped_count: int = 0
    seeds: list = field(default_factory=list)

    @property
    def valid(self):
        return self.capped_count < len(self.records)

    @property
    def times(self):
        return np.array([r.T for r in self.records if not r.capped])

    @property
    def standard_error(self):
        times = self.times
        return self.sd / math.sqrt(times.size) if times.size > 1 else 0.0


def summarize_records(records):
    records = list(records)
    capped = sum(1 for r in records if r.capped)
    summary = BatchSummary(records, capped_count=capped, seeds=[r.seed for r in records])
    times = summary.times
    if times.size:
        s = summarize(times)
        summary.mean, summary.sd, summary.ci_halfwidth, summary.median = s.mean, s.sd, s.ci_halfwidth, s.median
    else:
        logger.warning("all %d runs of the batch hit the iteration cap", len(records))
    return summary


def _batch_task(args):
    f, config, index = args
    seed = child_seed(config["seed"], index)
    oracle = f(make_rng(child_seed(seed, 1))) if callable(f) and not isinstance(f, FitnessOracle) else f
    return run(oracle, config.with_seed(seed))


def run_batch(f, config, reps, workers=1):
    """
    Run ``reps`` independent runs; repetition i uses child_seed(config seed, i).

    ``f`` is either an oracle or a callable drawing a fresh oracle from a
    generator, in which case the draw is seeded from the repetition seed too.
    """
    if reps < 1:
        raise ConfigurationError("reps must be at least 1")
    tasks = [(f, config, i) for i in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_batch_task, tasks))
    else:
        records = [_batch_task(task) for task in tasks]
    summary = summarize_records(records)
    if summary.capped_count:
        logger.warning("%d of %d runs capped at %d iterations",
                       summary.capped_count, reps, config.iteration_cap)
    logger.info("batch of %d runs: mean T %.1f", reps, summary.mean)
    return summary


def advance_lockstep(weights, t, reps, rng, init=None):
    """
    Advance ``reps`` independent (1+1) EA chains on the linear function with
    ``weights`` for exactly ``t`` iterations; returns the (reps, n) states.
    """
    rng = make_rng(rng)
    w = np.asarray(weights, dtype=float)
    n = w.size
    if init is None:
        X = rng.integers(0, 2, size=(reps, n), dtype=BIT_DTYPE)
    else:
        X = np.tile(as_bitstring(init), (reps, 1))
    for _ in range(t):
        flips = rng.random((reps, n)) < 1.0 / n
        change = (flips * (1 - 2 * X)) @ w
        accept = change <= 0
        X[accept] ^= flips[accept].astype(BIT_DTYPE)
    return X
