"""Core value types shared by every tournament engine.

Players are identified by their position in the true strength order:
id 1 is the strongest player, id n the weakest. A finished tournament
is a strict ranking of all n players plus a log of every match played,
including uncounted tie-break matches.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

# A player id doubles as the player's true strength rank (1 = strongest).
PlayerId = int

# Positions of an observed ranking: index 0 holds the tournament winner.
ObservedRanking = tuple[PlayerId, ...]


class MatchRecord(NamedTuple):
    """One simulated comparison between two players.

    ``counted`` is False exactly for tie-break matches (recursive
    tie-break replays and ranking-merge tiebreakers), which do not
    contribute to a format's match budget.
    """

    stage: str
    white: PlayerId
    black: PlayerId
    winner: PlayerId
    counted: bool


@dataclass(frozen=True, slots=True)
class TournamentResult:
    """Strict final ranking plus the full match log that produced it."""

    ranking: ObservedRanking
    matches: tuple[MatchRecord, ...]
    counted_matches: int

    @classmethod
    def from_log(cls, ranking: Sequence[PlayerId], matches: Sequence[MatchRecord]) -> "TournamentResult":
        counted = sum(1 for m in matches if m.counted)
        return cls(tuple(ranking), tuple(matches), counted)


class MatchLog:
    """Accumulates MatchRecord entries while an engine runs."""

    __slots__ = ("records", "counted")
    recording = True

    def __init__(self) -> None:
        self.records: list[MatchRecord] = []
        self.counted = 0

    def add(self, stage: str, white: PlayerId, black: PlayerId, winner: PlayerId, counted: bool) -> None:
        self.records.append(MatchRecord(stage, white, black, winner, counted))
        if counted:
            self.counted += 1


class CountingLog:
    """Drop-in replacement for MatchLog that keeps only match counts.

    Used for bulk Monte Carlo replications where materialising tens of
    millions of records would dominate the runtime.
    """

    __slots__ = ("records", "counted", "uncounted")
    recording = False

    def __init__(self) -> None:
        self.records = ()
        self.counted = 0
        self.uncounted = 0

    def add(self, stage: str, white: PlayerId, black: PlayerId, winner: PlayerId, counted: bool) -> None:
        if counted:
            self.counted += 1
        else:
            self.uncounted += 1


def is_permutation(ranking: Sequence[PlayerId], n: int) -> bool:
    """True iff ``ranking`` is a permutation of 1..n."""
    if len(ranking) != n:
        return False
    seen = set(ranking)
    return len(seen) == n and min(seen) == 1 and max(seen) == n


def validate_result(result: TournamentResult, n: int) -> bool:
    """Check that a result is internally consistent.

    True iff the ranking is a permutation of 1..n, every match record is
    well formed, and ``counted_matches`` agrees with the match log.
    """
    if n < 2:
        raise ValueError("a tournament needs at least 2 players")
    if not is_permutation(result.ranking, n):
        return False
    counted = 0
    for rec in result.matches:
        if rec.white == rec.black or rec.winner not in (rec.white, rec.black):
            return False
        if rec.counted:
            counted += 1
    return counted == result.counted_matches
