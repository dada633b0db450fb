"""
Closed-form models checked against exhaustive enumeration, exact rational
recursion and golden values.
"""

import itertools
import json
from fractions import Fraction
from functools import lru_cache
from math import comb
from pathlib import Path

import pytest

from src.utils.Errors import InvalidCounts
from src.utils.MathModels import (all_corrupt_probability, even_split_sizes, gini, grinding_success_probability,
                                  k_of_n_tail)

GOLDEN_DIR = Path(__file__).parent / "golden"


def _golden(name: str) -> dict:
    return json.loads((GOLDEN_DIR / name).read_text())


# ===================================================================
# All-corrupt probability
# ===================================================================

def test_all_corrupt_matches_enumeration():
    for total in range(1, 9):
        for corrupt in range(total + 1):
            for draws in range(total + 1):
                subsets = list(itertools.combinations(range(total), draws))
                hits = sum(1 for s in subsets if all(v < corrupt for v in s))
                assert all_corrupt_probability(total, corrupt, draws) == pytest.approx(hits / len(subsets))


def test_all_corrupt_golden():
    golden = _golden("collusion.json")
    for case in golden["cases"]:
        expected = case["numerator"] / case["denominator"]
        assert all_corrupt_probability(golden["n_eligible"], case["k"], golden["certs_required"]) == \
            pytest.approx(expected, rel=1e-12)


@pytest.mark.parametrize("total, corrupt, draws", [(0, 0, 0), (5, 6, 1), (5, -1, 1), (5, 2, 6)])
def test_invalid_counts(total, corrupt, draws):
    with pytest.raises(InvalidCounts):
        all_corrupt_probability(total, corrupt, draws)


# ===================================================================
# Grinding through reassignments
# ===================================================================

def _grinding_oracle(total: int, corrupt: int, draws: int, max_rejections: int) -> Fraction:
    @lru_cache(maxsize=None)
    def success(certs: int, rejections: int) -> Fraction:
        if certs == draws:
            return Fraction(1)
        p = Fraction(max(corrupt - certs, 0), total - certs)
        retry = success(certs, rejections + 1) if rejections < max_rejections else Fraction(0)
        return p * success(certs + 1, rejections) + (1 - p) * retry

    return success(0, 0)


def test_grinding_matches_exact_recursion():
    for total, corrupt, draws in [(10, 5, 3), (20, 4, 3), (12, 12, 4), (7, 2, 3), (30, 10, 5)]:
        for m in range(6):
            expected = float(_grinding_oracle(total, corrupt, draws, m))
            assert grinding_success_probability(total, corrupt, draws, m) == pytest.approx(expected, rel=1e-9)


def test_grinding_without_retries_is_all_corrupt():
    for corrupt in range(0, 21):
        assert grinding_success_probability(20, corrupt, 3, 0) == pytest.approx(all_corrupt_probability(20, corrupt, 3))


def test_grinding_is_monotone_in_retries():
    values = [grinding_success_probability(100, 10, 3, m) for m in range(10)]
    assert values == sorted(values)
    assert values[-1] > values[0]


def test_negative_retries_refused():
    with pytest.raises(InvalidCounts):
        grinding_success_probability(10, 5, 3, -1)


# ===================================================================
# Binomial tails, inequality and group sizes
# ===================================================================

def test_k_of_n_tail_edges():
    assert k_of_n_tail(0.3, 4, 0) == 1.0
    assert k_of_n_tail(0.3, 4, 5) == 0.0
    assert k_of_n_tail(0.3, 4, 1) == pytest.approx(1 - 0.7 ** 4)
    assert k_of_n_tail(0.5, 4, 3) == pytest.approx((comb(4, 3) + comb(4, 4)) / 16)


def test_gini():
    assert gini([1, 1, 1]) == pytest.approx(0.0)
    assert gini([0, 0, 1]) == pytest.approx(2.0 / 3.0)
    assert gini([]) == 0.0
    assert gini([0, 0]) == 0.0


def test_even_split_golden():
    golden = _golden("partition_sizes.json")
    for case in golden["cases"]:
        assert even_split_sizes(case["n"], golden["min_size"], golden["max_size"]) == case["sizes"]


@pytest.mark.parametrize("bounds", [(50, 100), (30, 40), (20, 30), (5, 10), (2, 3)])
def test_even_split_bounds(bounds):
    low, high = bounds
    for n in range(low, 400):
        sizes = even_split_sizes(n, low, high)
        assert sum(sizes) == n
        assert min(sizes) >= low
        if -(-n // high) <= n // low:
            assert max(sizes) <= high
            assert max(sizes) - min(sizes) <= 1
        else:
            # only the last group may run over
            assert sizes[:-1] == [high] * (len(sizes) - 1)
            assert sizes[-1] > high
    assert even_split_sizes(0, low, high) == []
    assert even_split_sizes(low - 1, low, high) == [low - 1]


def test_even_split_folds_the_remainder():
    assert even_split_sizes(41, 30, 40) == [41]
    assert even_split_sizes(79, 30, 40) == [40, 39]
    for n in range(31, 40):
        assert even_split_sizes(n, 20, 30) == [n]
    assert even_split_sizes(85, 30, 40) == [40, 45]
    assert even_split_sizes(95, 30, 40) == [32, 32, 31]
