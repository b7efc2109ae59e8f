"""Exact outcome distributions for small tournaments.

Runs a format engine repeatedly against a decision tape, depth-first
over every branch (match outcomes weighted by their probabilities,
random orderings enumerated uniformly), and accumulates the exact
probability of every final ranking. This is the independent ground
truth that Monte Carlo estimates are checked against.

Tie-break recursion is cut off at depth 2; deeper branches resolve by a
uniform random order and their total probability is reported as
``truncated_mass`` so callers can bound the truncation error.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations
from math import factorial
from typing import Callable, Iterable, Sequence

import numpy as np

from .formats import (
    FormatKind,
    FormatSpec,
    Seeding,
    TieBreakPolicy,
    _placement_knockout,
    _rank_round_robin,
    _run_format,
)
from .metrics import metric_value
from .model import CountingLog, ObservedRanking, PlayerId
from .prob import WinMatrix

_MAX_OUTCOME_BITS = 28
_MAX_ORDER_ITEMS = 6

_ORACLE_TIES = TieBreakPolicy(replay_cap=10, max_depth=2)


class EnumerationLimitError(ValueError):
    """The instance is too large for exhaustive enumeration."""


@dataclass(frozen=True)
class OutcomeEnumeration:
    """Exact probability of every final ranking of one format instance."""

    label: str
    n: int
    distribution: dict[ObservedRanking, float]
    truncated_mass: float

    def __post_init__(self) -> None:
        total = sum(self.distribution.values())
        if abs(total - 1.0) > 1e-12:
            raise AssertionError(f"enumeration mass {total} != 1")

    def place_probabilities(self) -> np.ndarray:
        """p[i-1, j-1] = probability that player i finishes in place j."""
        out = np.zeros((self.n, self.n))
        for ranking, prob in self.distribution.items():
            for place, player in enumerate(ranking):
                out[player - 1, place] += prob
        return out


class _TapeSampler:
    """Sampler that replays a recorded decision path, extending it with
    first options; the driver below backtracks over the tape."""

    __slots__ = ("rows", "tape", "pos", "prob", "truncated")

    def __init__(self, matrix: WinMatrix, tape: list[list[int]]) -> None:
        self.rows = matrix.rows()
        self.tape = tape
        self.pos = 0
        self.prob = 1.0
        self.truncated = False

    def _choose(self, n_options: int) -> int:
        if self.pos < len(self.tape):
            choice = self.tape[self.pos][0]
        else:
            self.tape.append([0, n_options])
            choice = 0
        self.pos += 1
        return choice

    def win(self, a: PlayerId, b: PlayerId) -> PlayerId:
        p = self.rows[a - 1][b - 1]
        if p >= 1.0:
            return a
        if p <= 0.0:
            return b
        if self._choose(2) == 0:
            self.prob *= p
            return a
        self.prob *= 1.0 - p
        return b

    def win_many(self, pairs: Sequence[tuple[PlayerId, PlayerId]]) -> list[PlayerId]:
        return [self.win(a, b) for a, b in pairs]

    def order(self, items: Iterable) -> list:
        pool = list(items)
        k = len(pool)
        if k <= 1:
            return pool
        if k > _MAX_ORDER_ITEMS:
            raise EnumerationLimitError(f"cannot enumerate orderings of {k} items")
        choice = self._choose(factorial(k))
        self.prob *= 1.0 / factorial(k)
        for idx, perm in enumerate(permutations(pool)):
            if idx == choice:
                return list(perm)
        raise AssertionError("unreachable")

    def tie_fallback_order(self, items: Iterable) -> list:
        self.truncated = True
        return self.order(items)


def _enumerate(run_fn: Callable, matrix: WinMatrix, label: str, n: int) -> OutcomeEnumeration:
    tape: list[list[int]] = []
    dist: dict[ObservedRanking, float] = {}
    truncated = 0.0
    while True:
        sampler = _TapeSampler(matrix, tape)
        ranking = tuple(run_fn(sampler))
        dist[ranking] = dist.get(ranking, 0.0) + sampler.prob
        if sampler.truncated:
            truncated += sampler.prob
        while tape and tape[-1][0] + 1 >= tape[-1][1]:
            tape.pop()
        if not tape:
            break
        tape[-1][0] += 1
    return OutcomeEnumeration(label, n, dist, truncated)


def _make_runner(spec: FormatSpec, n: int, bracket: Sequence[PlayerId] | None,
                 policy: TieBreakPolicy) -> Callable:
    """Build run_fn(sampler) -> ranking for one format instance.

    Knockout-family formats run over a fixed bracket (identity order by
    default) instead of branching over every possible draw.
    """
    if spec.kind in (FormatKind.KNOCKOUT, FormatKind.TRIPLE_KNOCKOUT, FormatKind.DRAW_AND_PROCESS):
        fixed = tuple(bracket) if bracket is not None else tuple(range(1, n + 1))
        if sorted(fixed) != list(range(1, n + 1)):
            raise ValueError("bracket must be a permutation of 1..n")
        if spec.kind is FormatKind.DRAW_AND_PROCESS:
            from .formats import _draw_and_process

            return lambda sampler: _draw_and_process(sampler, CountingLog(), fixed)
        best_of = 3 if spec.kind is FormatKind.TRIPLE_KNOCKOUT else 1
        return lambda sampler: _placement_knockout(sampler, CountingLog(), fixed, "ko-", best_of=best_of)
    if bracket is not None:
        raise ValueError(f"{spec.label} does not take a bracket")
    if spec.kind in (FormatKind.ROUND_ROBIN, FormatKind.DOUBLE_ROUND_ROBIN):
        passes = 2 if spec.kind is FormatKind.DOUBLE_ROUND_ROBIN else 1
        players = list(range(1, n + 1))
        return lambda sampler: _rank_round_robin(sampler, CountingLog(), players, passes, "rr",
                                                 policy, Seeding.RANDOM)
    return lambda sampler: _run_format(spec, sampler, CountingLog(), policy=policy)


def enumerate_outcomes(spec: FormatSpec, matrix: WinMatrix,
                       bracket: Sequence[PlayerId] | None = None) -> OutcomeEnumeration:
    """Exhaustively enumerate one format instance.

    Rejects instances whose counted-match count exceeds the enumeration
    bound; random orderings of more than a handful of items (group
    deals, large tie groups) are rejected by the tape sampler itself.
    """
    if matrix.n != spec.n:
        raise ValueError(f"matrix is {matrix.n}x{matrix.n} but the format needs n={spec.n}")
    if spec.counted_matches > _MAX_OUTCOME_BITS:
        raise EnumerationLimitError(
            f"{spec.label} at n={spec.n} needs {spec.counted_matches} match bits; "
            f"the enumeration bound is {_MAX_OUTCOME_BITS}"
        )
    run_fn = _make_runner(spec, spec.n, bracket, _ORACLE_TIES)
    return _enumerate(run_fn, matrix, spec.label, spec.n)


def mc_metric_values(spec: FormatSpec, matrix: WinMatrix, metric: str, reps: int,
                     master_seed: int, bracket: Sequence[PlayerId] | None = None, *,
                     k: int | None = None, log_base: float | None = None) -> np.ndarray:
    """Monte Carlo companion to :func:`enumerate_outcomes`.

    Simulates the identical instance (same fixed bracket for the
    knockout family) and returns the per-replication metric values, so
    sample means can be checked against exact expectations.
    """
    from .engine import replication_rng
    from .prob import MatchSampler

    run_fn = _make_runner(spec, spec.n, bracket, TieBreakPolicy())
    out = np.empty(reps)
    for i in range(reps):
        sampler = MatchSampler(matrix, replication_rng(master_seed, i))
        out[i] = metric_value(tuple(run_fn(sampler)), metric, k=k, log_base=log_base)
    return out


def truncation_bound(enum: OutcomeEnumeration, metric: str, *, k: int | None = None,
                     log_base: float | None = None) -> float:
    """Worst-case expectation error from cut-off tie-break branches."""
    if enum.truncated_mass == 0.0:
        return 0.0
    values = [metric_value(r, metric, k=k, log_base=log_base) for r in enum.distribution]
    return enum.truncated_mass * (max(values) - min(values))


def expected_metric(enum: OutcomeEnumeration, metric: str, *, k: int | None = None,
                    log_base: float | None = None) -> float:
    """Exact expectation of a metric under the enumerated distribution."""
    return sum(prob * metric_value(r, metric, k=k, log_base=log_base)
               for r, prob in enum.distribution.items())


def metric_moments(enum: OutcomeEnumeration, metric: str, *, k: int | None = None,
                   log_base: float | None = None) -> tuple[float, float]:
    """Exact (mean, standard deviation) of a metric."""
    mean = 0.0
    second = 0.0
    for r, prob in enum.distribution.items():
        v = metric_value(r, metric, k=k, log_base=log_base)
        mean += prob * v
        second += prob * v * v
    var = max(second - mean * mean, 0.0)
    return mean, var**0.5
