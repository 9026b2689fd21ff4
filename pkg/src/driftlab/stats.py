"""Small statistics helpers shared by the Monte-Carlo checks."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from driftlab.errors import EmptyInputError

# two-sided 95% normal quantile
Z95 = float(stats.norm.ppf(0.975))


@dataclass(frozen=True)
class SampleSummary:
    count: int
    mean: float
    sd: float
    ci_halfwidth: float
    median: float

    @property
    def standard_error(self):
        if self.count < 2:
            return 0.0
        return self.sd / math.sqrt(self.count)


def summarize(samples):
    """Mean, sample sd, normal-approximation 95% CI half-width and median."""
    values = np.asarray(samples, dtype=float)
    if values.size == 0:
        raise EmptyInputError("cannot summarize an empty sample")
    count = int(values.size)
    mean = float(values.mean())
    sd = float(values.std(ddof=1)) if count > 1 else 0.0
    half = Z95 * sd / math.sqrt(count) if count > 1 else 0.0
    return SampleSummary(count, mean, sd, half, float(np.median(values)))


def within_standard_errors(summary, target, k=3.0):
    """True if ``target`` lies within ``k`` standard errors of the sample mean."""
    return abs(summary.mean - target) <= k * summary.standard_error


def binomial_goodness_of_fit(counts, n, p):
    """
    Chi-square goodness of fit of a flip-count histogram against Binomial(n, p).

    ``counts[k]`` is the number of samples with exactly k flips. Expected
    cells below 5 are pooled into the upper tail. Returns (statistic, p-value).
    """
    counts = np.asarray(counts, dtype=float)
    total = counts.sum()
    pmf = stats.binom.pmf(np.arange(n + 1), n, p)
    expected = total * pmf

    observed_cells = []
    expected_cells = []
    obs_acc = exp_acc = 0.0
    for k in range(n + 1):
        obs_acc += counts[k] if k < counts.size else 0.0
        exp_acc += expected[k]
        if exp_acc >= 5.0:
            observed_cells.append(obs_acc)
            expected_cells.append(exp_acc)
            obs_acc = exp_acc = 0.0
    if exp_acc > 0.0:
        observed_cells[-1] += obs_acc
        expected_cells[-1] += exp_acc

    result = stats.chisquare(observed_cells, expected_cells)
    return float(result.statistic), float(result.pvalue)


def paired_greater_pvalue(other, base):
    """
    One-sided paired t-test p-value for mean(other) > mean(base).

    Identical samples (zero variance of the differences) give p = 0.5 when
    the mean difference is zero.
    """
    other = np.asarray(other, dtype=float)
    base = np.asarray(base, dtype=float)
    diffs = other - base
    if diffs.size < 2 or np.all(diffs == diffs[0]):
        if diffs.size and diffs[0] > 0:
            return 0.0
        return 0.5 if not diffs.size or diffs[0] == 0 else 1.0
    return float(stats.ttest_rel(other, base, alternative="greater").pvalue)
