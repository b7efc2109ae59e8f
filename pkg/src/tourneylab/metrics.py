"""Ranking-efficacy metrics.

All metrics compare one observed ranking against the true strength
order (the identity). Lower is better everywhere; the minimum is 0 for
both inversion counts and 1.0 for the average rank of the top players.
"""

from __future__ import annotations

import math
from bisect import bisect_right, insort
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .model import ObservedRanking


@dataclass(frozen=True)
class MetricVector:
    """All configured metrics for one replication."""

    inversions: int
    weighted_inversions: float
    avg_rank_top: dict[int, float]


@lru_cache(maxsize=32)
def _upper_triangle(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(n, k=1)


def inversions(ranking: Sequence[int]) -> int:
    """Number of player pairs whose observed order contradicts true strength.

    A pair counts when the weaker player finishes above the stronger one;
    this is the Kendall tau distance from the identity ranking.
    """
    arr = np.asarray(ranking)
    iu, ju = _upper_triangle(len(arr))
    return int(np.count_nonzero(arr[iu] > arr[ju]))


def weighted_inversions(ranking: Sequence[int], log_base: float | None = None) -> float:
    """Inversion count weighted towards mistakes near the top.

    Each inverted pair contributes ``1 / log(s + 1)`` where s is the true
    rank of the stronger (overtaken) player, so misplacing the best
    players costs far more than shuffling the tail. ``log_base`` selects
    the logarithm base; the default is the natural logarithm.
    """
    if log_base is not None and not log_base > 1:
        raise ValueError("log base must exceed 1")
    arr = np.asarray(ranking)
    iu, ju = _upper_triangle(len(arr))
    inverted_over = arr[ju][arr[iu] > arr[ju]]  # true ranks of overtaken players
    if inverted_over.size == 0:
        return 0.0
    total = float(np.sum(1.0 / np.log(inverted_over + 1.0)))
    if log_base is not None:
        total *= math.log(log_base)
    return total


def avg_rank_top(ranking: Sequence[int], k: int) -> float:
    """Average true rank of the observed top k, normalised to 1.0 at best.

    Sum of the true ranks of the first k finishers divided by the
    theoretical minimum k(k+1)/2. Insensitive to the order within the
    top k.
    """
    if not 1 <= k <= len(ranking):
        raise ValueError(f"k must be in 1..{len(ranking)}, got {k}")
    return sum(ranking[:k]) / (k * (k + 1) / 2)


def metric_vector(
    ranking: ObservedRanking,
    top_k: Sequence[int] = (1, 8),
    log_base: float | None = None,
) -> MetricVector:
    """Compute every configured metric for one observed ranking."""
    arr = np.asarray(ranking)
    iu, ju = _upper_triangle(len(arr))
    mask = arr[iu] > arr[ju]
    inv = int(np.count_nonzero(mask))
    if inv:
        weighted = float(np.sum(1.0 / np.log(arr[ju][mask] + 1.0)))
        if log_base is not None:
            weighted *= math.log(log_base)
    else:
        weighted = 0.0
    tops = {k: avg_rank_top(ranking, k) for k in top_k}
    return MetricVector(inv, weighted, tops)


class MetricComputer:
    """Precomputed tables for bulk metric evaluation.

    Counts, for each position, how many weaker players finished above it
    (one bisect per position), which yields the inversion count and the
    weighted count in a single pass. Independent of the vectorised
    functions above, which double as a cross-check in tests.
    """

    __slots__ = ("top_k", "weights", "_norms")

    def __init__(self, n: int, top_k: Sequence[int] = (1, 8), log_base: float | None = None) -> None:
        scale = math.log(log_base) if log_base is not None else 1.0
        self.weights = [0.0] + [scale / math.log(p + 1) for p in range(1, n + 1)]
        self.top_k = tuple(top_k)
        self._norms = {k: k * (k + 1) / 2 for k in self.top_k}

    def vector(self, ranking: Sequence[int]) -> MetricVector:
        inv = 0
        weighted = 0.0
        weights = self.weights
        seen: list[int] = []
        for j, pid in enumerate(ranking):
            above = j - bisect_right(seen, pid)
            if above:
                inv += above
                weighted += above * weights[pid]
            insort(seen, pid)
        tops = {k: sum(ranking[:k]) / self._norms[k] for k in self.top_k}
        return MetricVector(inv, weighted, tops)


def metric_value(ranking: ObservedRanking, name: str, *, k: int | None = None, log_base: float | None = None) -> float:
    """Evaluate a single metric by name (used by the enumeration oracle)."""
    if name == "inversions":
        return float(inversions(ranking))
    if name == "weighted_inversions":
        return weighted_inversions(ranking, log_base)
    if name == "avg_rank_top":
        if k is None:
            raise ValueError("avg_rank_top needs k")
        return avg_rank_top(ranking, k)
    raise ValueError(f"unknown metric {name!r}")
