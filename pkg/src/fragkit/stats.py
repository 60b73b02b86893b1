"""Statistical tests and estimators used by the experiments and the test suite."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats

log = logging.getLogger(__name__)

MIN_EXPECTED = 5.0


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    dof: int | None = None


def ks_test(samples, cdf: Callable) -> TestResult:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value."""
    x = np.asarray(samples, dtype=float)
    if x.size < 10:
        raise ValueError("KS test needs at least 10 samples")
    r = stats.kstest(x, cdf, method="asymp")
    return TestResult(float(r.statistic), float(r.pvalue))


def ks_critical(n: int, alpha: float = 0.01) -> float:
    """Asymptotic critical value of the one-sample KS statistic."""
    return float(stats.kstwobign.ppf(1.0 - alpha) / math.sqrt(n))


def pool_cells(observed, expected, min_expected: float = MIN_EXPECTED):
    """Merge all cells with expected count below ``min_expected`` into one pooled cell.

    If the pooled cell is still too small, the next smallest cells join it.
    """
    obs = np.asarray(observed, dtype=float)
    exp = np.asarray(expected, dtype=float)
    order = np.argsort(exp, kind="stable")
    n_small = int(np.sum(exp < min_expected))
    if n_small == 0:
        return obs, exp
    k = n_small
    while k < exp.size and exp[order[:k]].sum() < min_expected:
        k += 1
    if k <= 1:
        return obs, exp
    pool = order[:k]
    keep = np.sort(order[k:])
    return (np.concatenate([obs[keep], [obs[pool].sum()]]),
            np.concatenate([exp[keep], [exp[pool].sum()]]))


def chi_square(observed, expected, ddof: int = 0) -> TestResult:
    """Pearson chi-square; ``expected`` (counts or probabilities) is rescaled to the observed total."""
    o = np.asarray(observed, dtype=float)
    e = np.asarray(expected, dtype=float)
    o, e = pool_cells(o, e * (o.sum() / e.sum()))
    dof = o.size - 1 - ddof
    if dof < 1:
        raise ValueError("chi-square needs at least two cells after pooling")
    stat = float(np.sum((o - e) ** 2 / e))
    return TestResult(stat, float(stats.chi2.sf(stat, dof)), dof)


def chi_square_two_sample(a_counts, b_counts) -> TestResult:
    """Homogeneity test of two count vectors over the same cells."""
    a = np.asarray(a_counts, dtype=float)
    b = np.asarray(b_counts, dtype=float)
    keep = (a + b) > 0
    table = np.vstack([a[keep], b[keep]])
    r = stats.chi2_contingency(table, correction=False)
    return TestResult(float(r.statistic), float(r.pvalue), int(r.dof))


def mean_se(x) -> tuple[float, float]:
    x = np.asarray(x, dtype=float)
    if x.size < 2:
        raise ValueError("need at least two values for a standard error")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def log_moment(values, t: float) -> tuple[float, float]:
    """``-(1/t) log mean(values)`` with its delta-method standard error."""
    m, se = mean_se(values)
    if m <= 0.0:
        return math.inf, math.inf
    return -math.log(m) / t, se / (m * t)


def within_se(estimate: float, target: float, se: float, k: float = 3.0) -> bool:
    return abs(estimate - target) <= k * se


def retry_on_new_seed(check: Callable[[int], tuple[bool, object]], seed: int,
                      logger: logging.Logger = log) -> tuple[bool, object, list[int]]:
    """Run ``check(seed)``; on failure retry once with a derived seed. Both seeds are logged."""
    ok, info = check(seed)
    seeds = [seed]
    if not ok:
        retry = seed + 1_000_003
        seeds.append(retry)
        logger.warning("statistical check failed at seed %d (%s); retrying with seed %d", seed, info, retry)
        ok, info = check(retry)
    logger.info("seeds used: %s", seeds)
    return ok, info, seeds
