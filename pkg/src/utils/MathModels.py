"""
Module: MathModels
This module provides the closed-form models the simulator is checked against:
k-of-n fusion of per-modality error rates, the hypergeometric chance that every
assigned verifier is corrupt, the same chance when rejections can be ground
through reassignments, and inequality measures on token balances.

No file I/O is performed in this module.
"""

from fractions import Fraction
from typing import Iterable, Tuple

import numpy as np
import scipy.special
from scipy.stats import binom

from src.utils.Errors import InvalidCounts


def k_of_n_tail(p: float, n: int, k: int) -> float:
    """
    Probability that at least k of n independent trials succeed.

    :param p: Per-trial success probability.
    :param n: Number of trials.
    :param k: Required successes.
    :return: P[X >= k] for X ~ Binomial(n, p).
    """
    if k <= 0:
        return 1.0
    if k > n:
        return 0.0
    return float(binom.sf(k - 1, n, p))


def fused_error_rates(modality_far: float, modality_frr: float, n: int, k: int) -> Tuple[float, float]:
    """
    Error rates of a k-of-n fusion rule under modality independence.

    :return: (FAR, FRR) of the fused decision.
    """
    far = k_of_n_tail(modality_far, n, k)
    frr = 1.0 - k_of_n_tail(1.0 - modality_frr, n, k)
    return far, frr


def all_corrupt_probability(total: int, corrupt: int, draws: int) -> float:
    """
    Chance that draws verifiers sampled without replacement from total, of
    which corrupt are colluding, are all colluding: C(k, c) / C(N, c).
    """
    _check_counts(total, corrupt, draws)
    if draws > corrupt:
        return 0.0
    ratio = Fraction(scipy.special.comb(corrupt, draws, exact=True),
                     scipy.special.comb(total, draws, exact=True))
    return float(ratio)


def grinding_success_probability(total: int, corrupt: int, draws: int, max_rejections: int) -> float:
    """
    Chance of collecting draws corrupt certificates when each honest
    rejection can be answered by a reassignment, at most max_rejections times.
    Certifiers leave the pool; rejecting verifiers stay in it.

    With max_rejections = 0 this equals all_corrupt_probability.
    """
    _check_counts(total, corrupt, draws)
    if max_rejections < 0:
        raise InvalidCounts("max_rejections must be non-negative")
    if draws > corrupt:
        return 0.0
    # value[u] = success probability from the current certificate count with u rejections used
    value = np.ones(max_rejections + 1)
    for j in range(draws - 1, -1, -1):
        p = (corrupt - j) / (total - j)
        current = np.zeros(max_rejections + 1)
        for u in range(max_rejections, -1, -1):
            after_reject = current[u + 1] if u < max_rejections else 0.0
            current[u] = p * value[u] + (1.0 - p) * after_reject
        value = current
    return float(value[0])


def gini(values: Iterable[float]) -> float:
    """Gini coefficient of non-negative values; 0 for an empty or all-zero population."""
    x = np.sort(np.asarray(list(values), dtype=np.float64))
    n = x.size
    total = x.sum()
    if n == 0 or total <= 0:
        return 0.0
    index = np.arange(1, n + 1)
    return float((2.0 * np.sum(index * x)) / (n * total) - (n + 1.0) / n)


def even_split_sizes(n: int, min_size: int, max_size: int) -> list:
    """
    Split n members into the fewest groups that keeps every size within
    [min_size, max_size]; sizes differ by at most one, larger groups first.

    When no group count fits (e.g. 41 under (30, 40)), floor(n / min_size)
    groups are formed: all but the last hold max_size and the last takes the
    remainder, the only group above max_size. Fewer than min_size members
    stay in one undersized group.
    """
    if n <= 0:
        return []
    fewest = -(-n // max_size)
    most = n // min_size
    if most == 0:
        return [n]
    if fewest > most:
        return [max_size] * (most - 1) + [n - (most - 1) * max_size]
    base, extra = divmod(n, fewest)
    return [base + 1] * extra + [base] * (fewest - extra)


##################################
# MARK: Private functions
##################################

def _check_counts(total: int, corrupt: int, draws: int) -> None:
    if total < 1:
        raise InvalidCounts("population must be at least 1")
    if not 0 <= corrupt <= total:
        raise InvalidCounts(f"corrupt count {corrupt} outside [0, {total}]")
    if not 0 <= draws <= total:
        raise InvalidCounts(f"draw count {draws} outside [0, {total}]")
