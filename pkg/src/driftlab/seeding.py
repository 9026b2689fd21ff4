"""
Random number streams.

Every stochastic operation draws from a ``numpy.random.Generator`` backed by
PCG64 (period 2**128). Child streams are derived from a master seed and an
index through ``numpy.random.SeedSequence``, so a batch produces the same
numbers no matter how its repetitions are scheduled.
"""

import numpy as np

SEED_MASK = 2**64 - 1

RNG_IDENTITY = "numpy.random.PCG64 seeded via SeedSequence"


def make_rng(seed):
    """Return a PCG64 generator for an integer seed (or pass a generator through)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(int(seed) & SEED_MASK))


def child_seed(master_seed, index):
    """Deterministically mix (master_seed, index) into a 64-bit child seed."""
    seq = np.random.SeedSequence([int(master_seed) & SEED_MASK, int(index)])
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def child_seeds(master_seed, count):
    return [child_seed(master_seed, i) for i in range(count)]
