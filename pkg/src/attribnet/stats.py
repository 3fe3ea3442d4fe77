"""Hoeffding calculators, the s1/s2 convergence statistics and a one-sided
paired Wilcoxon signed-rank test."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.stats import rankdata

EXACT_MAX_N = 20


class UndefinedStatistic(ValueError):
    """Raised when a normalized statistic meets an all-zero mean map."""


def _check_hoeffding(value_range: float, delta: float) -> None:
    if not value_range > 0:
        raise ValueError("value_range must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")


def hoeffding_deviation(value_range: float, delta: float, m: int) -> float:
    """Deviation ``t`` of an m-sample mean that is exceeded with probability at most ``delta``."""
    _check_hoeffding(value_range, delta)
    if m < 1:
        raise ValueError("m must be >= 1")
    return value_range * math.sqrt(-0.5 * math.log(delta / 2)) / math.sqrt(m)


def hoeffding_sample_size_exact(value_range: float, delta: float, t: float) -> float:
    """Sample size before rounding up."""
    _check_hoeffding(value_range, delta)
    if not t > 0:
        raise ValueError("t must be positive")
    return value_range**2 * 0.5 * math.log(2 / delta) / t**2


def hoeffding_sample_size(value_range: float, delta: float, t: float) -> int:
    return math.ceil(hoeffding_sample_size_exact(value_range, delta, t))


def _stack(maps) -> np.ndarray:
    rows = [np.asarray(getattr(m, "values", m), dtype=np.float64) for m in maps]
    if not rows:
        raise ValueError("need at least one attribution map")
    if len({r.shape for r in rows}) != 1 or rows[0].ndim != 1:
        raise ValueError("attribution maps must share one 1-d shape")
    return np.stack(rows)


def _means(maps_a, maps_b) -> tuple[np.ndarray, np.ndarray]:
    a, b = _stack(maps_a), _stack(maps_b)
    if a.shape[1] != b.shape[1]:
        raise ValueError(f"dimension mismatch: {a.shape[1]} vs {b.shape[1]}")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"the two halves must have equal length, got {a.shape[0]} and {b.shape[0]}")
    return a.mean(axis=0), b.mean(axis=0)


def s1(maps_a, maps_b) -> float:
    """l2 distance between the means of two equally sized lists of maps."""
    ma, mb = _means(maps_a, maps_b)
    return float(np.linalg.norm(ma - mb))


def s2(maps_a, maps_b) -> float:
    """l2 distance between the two means after scaling each to unit norm."""
    ma, mb = _means(maps_a, maps_b)
    na, nb = np.linalg.norm(ma), np.linalg.norm(mb)
    if na == 0 or nb == 0:
        raise UndefinedStatistic("mean attribution map is zero; s2 undefined")
    return float(np.linalg.norm(ma / na - mb / nb))


class WilcoxonResult(NamedTuple):
    statistic: float  # sum of ranks of positive differences
    p: float
    method: str  # "exact", "approx" or "degenerate"
    n: int


def _signed_ranks(differences) -> tuple[np.ndarray, np.ndarray]:
    d = np.asarray(differences, dtype=np.float64)
    d = d[d != 0]
    return d, rankdata(np.abs(d), method="average")


def rank_sum_distribution(ranks: np.ndarray) -> np.ndarray:
    """Counts of each value of twice the positive rank sum over all 2^n sign patterns.

    Twice an average rank is an integer, so the distribution is accumulated
    exactly one rank at a time: each rank is either added or not.
    """
    doubled = np.rint(2 * np.asarray(ranks)).astype(np.int64)
    counts = np.zeros(int(doubled.sum()) + 1, dtype=np.int64 if len(doubled) < 62 else object)
    counts[0] = 1
    for r in doubled:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts = counts + shifted
    return counts


def wilcoxon_exact_p(differences, alternative: str = "greater") -> float:
    d, ranks = _signed_ranks(differences)
    if len(d) == 0:
        return 1.0
    w2 = int(np.rint(2 * ranks[d > 0].sum()))
    counts = rank_sum_distribution(ranks)
    total = counts.sum()
    if alternative == "greater":
        return float(counts[w2:].sum() / total)
    if alternative == "less":
        return float(counts[: w2 + 1].sum() / total)
    raise ValueError(f"alternative must be 'greater' or 'less', got {alternative!r}")


def wilcoxon_one_sided(differences: Sequence[float], alternative: str = "greater") -> WilcoxonResult:
    """One-sided Wilcoxon signed-rank test on paired differences.

    Zero differences are dropped, ties get average ranks. Up to 20 non-zero
    differences the p-value is exact over all sign patterns; above that a
    normal approximation with tie-corrected variance and a 0.5 continuity
    correction is used. ``alternative="greater"`` tests for differences
    shifted above zero.
    """
    if alternative not in ("greater", "less"):
        raise ValueError(f"alternative must be 'greater' or 'less', got {alternative!r}")
    d, ranks = _signed_ranks(differences)
    n = len(d)
    if n == 0:
        return WilcoxonResult(0.0, 1.0, "degenerate", 0)
    w = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        return WilcoxonResult(w, wilcoxon_exact_p(d, alternative), "exact", n)
    mean = n * (n + 1) / 4
    _, tie_counts = np.unique(ranks, return_counts=True)
    var = n * (n + 1) * (2 * n + 1) / 24 - float(((tie_counts**3 - tie_counts)).sum()) / 48
    sd = math.sqrt(var)
    z = (w - mean - 0.5) / sd if alternative == "greater" else -(w - mean + 0.5) / sd
    # upper normal tail via erfc keeps precision for tiny p-values
    p = 0.5 * math.erfc(z / math.sqrt(2))
    return WilcoxonResult(w, p, "approx", n)
