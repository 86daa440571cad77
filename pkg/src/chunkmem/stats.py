"""Wilcoxon signed-rank test for paired samples."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

EXACT_MAX_N = 25
MIN_PAIRS = 5


class AllZeroDifferences(ValueError):
    pass


class TooFewPairs(ValueError):
    pass


@dataclass(frozen=True)
class WilcoxonResult:
    statistic: float
    p_value: float
    n: int
    w_plus: float
    w_minus: float
    method: str


def nonzero_differences(x: Sequence[float], y: Sequence[float]) -> list[float]:
    if len(x) != len(y):
        raise ValueError(f"paired samples differ in length: {len(x)} vs {len(y)}")
    diffs = [float(a) - float(b) for a, b in zip(x, y)]
    kept = [d for d in diffs if d != 0]
    if diffs and not kept:
        raise AllZeroDifferences("every paired difference is zero")
    if len(kept) < MIN_PAIRS:
        raise TooFewPairs(f"need at least {MIN_PAIRS} non-zero differences, got {len(kept)}")
    return kept


def average_ranks(values: Sequence[float]) -> list[float]:
    """1-based ranks, tied values sharing the mean of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[order[k]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def exact_p_value(ranks: Sequence[float], statistic: float) -> float:
    """Two-sided p under the sign-flip null, counted exactly.

    Average ranks are multiples of 1/2, so doubling them gives integers and
    the distribution of the positive-rank sum is a subset-sum count.
    """
    doubled = [round(2 * r) for r in ranks]
    counts = [0] * (sum(doubled) + 1)
    counts[0] = 1
    reach = 0
    for r in doubled:
        for s in range(reach, -1, -1):
            if counts[s]:
                counts[s + r] += counts[s]
        reach += r
    threshold = round(2 * statistic)
    tail = sum(counts[: threshold + 1])
    return float(min(Fraction(1), Fraction(2 * tail, 2 ** len(ranks))))


def normal_p_value(ranks: Sequence[float], abs_diffs: Sequence[float], statistic: float) -> float:
    n = len(ranks)
    mean = n * (n + 1) / 4
    ties: dict[float, int] = {}
    for v in abs_diffs:
        ties[v] = ties.get(v, 0) + 1
    var = n * (n + 1) * (2 * n + 1) / 24 - sum(t**3 - t for t in ties.values()) / 48
    z = min(0.0, (statistic - mean + 0.5) / math.sqrt(var))
    return min(1.0, math.erfc(-z / math.sqrt(2)))


def wilcoxon_signed_rank(x: Sequence[float], y: Sequence[float]) -> WilcoxonResult:
    diffs = nonzero_differences(x, y)
    abs_diffs = [abs(d) for d in diffs]
    ranks = average_ranks(abs_diffs)
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_minus = sum(r for r, d in zip(ranks, diffs) if d < 0)
    statistic = min(w_plus, w_minus)
    n = len(diffs)
    if n <= EXACT_MAX_N:
        p, method = exact_p_value(ranks, statistic), "exact"
    else:
        p, method = normal_p_value(ranks, abs_diffs, statistic), "normal"
    return WilcoxonResult(statistic, p, n, w_plus, w_minus, method)


def monte_carlo_p_value(
    x: Sequence[float],
    y: Sequence[float],
    samples: int = 1_000_000,
    seed: int = 0,
    batch: int = 100_000,
) -> float:
    """Estimate the two-sided p by drawing random sign assignments."""
    diffs = nonzero_differences(x, y)
    ranks = np.asarray(average_ranks([abs(d) for d in diffs]))
    observed = min(ranks[np.asarray(diffs) > 0].sum(), ranks[np.asarray(diffs) < 0].sum())
    total = ranks.sum()
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < samples:
        size = min(batch, samples - done)
        signs = rng.integers(0, 2, size=(size, len(ranks)), dtype=np.int8)
        w = signs @ ranks
        hits += int(np.count_nonzero(np.minimum(w, total - w) <= observed + 1e-9))
        done += size
    return hits / samples
