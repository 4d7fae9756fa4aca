"""Statistics against a brute-force sort-based oracle, plus trend labeling."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anchorgen.stats import VarStats, compute_stats


def sort_oracle(series):
    """Independent order statistics: explicit sort, midpoint median."""
    s = sorted(series)
    n = len(s)
    median = s[n // 2] if n % 2 else (s[n // 2 - 1] + s[n // 2]) / 2.0
    return s[0], s[-1], sum(series) / n, median


class TestComputeStats:
    def test_small_example(self):
        stats = compute_stats([1.0, 2.0, 3.0])
        assert stats.minimum == 1.0 and stats.maximum == 3.0
        assert stats.mean == 2.0 and stats.median == 2.0
        assert stats.trend == "up"

    def test_constant_is_flat(self):
        assert compute_stats(np.ones(50)).trend == "flat"

    def test_decreasing_is_down(self):
        assert compute_stats(np.arange(20.0)[::-1]).trend == "down"

    def test_noise_without_drift_can_be_up_or_down_but_valid(self):
        stats = compute_stats(np.random.default_rng(0).standard_normal(100))
        assert stats.trend in ("up", "down", "flat")

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            compute_stats([])

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            compute_stats([1.0, float("nan")])

    def test_single_sample(self):
        stats = compute_stats([4.2])
        assert stats.minimum == stats.maximum == stats.mean == 4.2
        assert stats.trend == "flat"

    @settings(max_examples=200, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 64))
    def test_matches_sort_oracle_exactly(self, seed, n):
        x = np.random.default_rng(seed).standard_normal(n)
        stats = compute_stats(x)
        lo, hi, mean, median = sort_oracle(list(x))
        assert stats.minimum == lo
        assert stats.maximum == hi
        assert stats.median == median
        assert stats.mean == pytest.approx(mean, rel=1e-12)


class TestVarStats:
    def test_ordering_invariants_enforced(self):
        with pytest.raises(ValueError):
            VarStats(minimum=2.0, maximum=1.0, mean=1.5, median=1.5, trend="up")
        with pytest.raises(ValueError):
            VarStats(minimum=0.0, maximum=1.0, mean=2.0, median=0.5, trend="up")

    def test_unknown_trend_rejected(self):
        with pytest.raises(ValueError):
            VarStats(minimum=0.0, maximum=1.0, mean=0.5, median=0.5,
                     trend="sideways")
