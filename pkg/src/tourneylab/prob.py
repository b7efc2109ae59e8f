"""Winning-probability models and match outcome sampling.

A tournament is driven by an n-by-n matrix of pairwise winning
probabilities. Three sources are supported: the linear skill model
(probability proportional to the gap in true ranks), Elo rating tables
(logistic expectation), and explicit probability matrices loaded from
CSV files.
"""

from __future__ import annotations

import csv
import math
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .model import PlayerId


class RatingFileError(ValueError):
    """Raised for malformed rating or matrix files, with a line number."""


@dataclass(frozen=True)
class SkillModel:
    """Linear skill model: the stronger player's edge grows with the rank gap."""

    skill: float

    def __post_init__(self) -> None:
        if not self.skill > 0:
            raise ValueError(f"skill must be positive, got {self.skill}")


@dataclass(frozen=True)
class RatingTable:
    """Named players with real-valued ratings (higher is stronger)."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.entries]
        if len(names) < 2:
            raise ValueError("a rating table needs at least 2 entries")
        if len(set(names)) != len(names):
            raise ValueError("rating table contains duplicate names")
        for _, rating in self.entries:
            if not math.isfinite(rating):
                raise ValueError("ratings must be finite")


@dataclass(frozen=True)
class WinMatrix:
    """Pairwise winning probabilities for players 1..n.

    ``p[i-1, j-1]`` is the probability that player i beats player j.
    Off-diagonal entries satisfy p_ij + p_ji = 1; the diagonal is fixed
    at 0.5 and never sampled.
    """

    n: int
    p: np.ndarray

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError("need at least 2 players")
        if self.p.shape != (self.n, self.n):
            raise ValueError(f"expected a {self.n}x{self.n} matrix, got {self.p.shape}")
        self.p.setflags(write=False)

    def win_prob(self, a: PlayerId, b: PlayerId) -> float:
        return float(self.p[a - 1, b - 1])

    @cached_property
    def _row_lists(self) -> list[list[float]]:
        return self.p.tolist()

    def rows(self) -> list[list[float]]:
        """Probabilities as nested lists, for fast scalar lookups."""
        return self._row_lists

    def check_complement(self, tol: float = 1e-9) -> bool:
        off = ~np.eye(self.n, dtype=bool)
        return bool(np.all(np.abs((self.p + self.p.T) - 1.0)[off] <= tol))

    def check_monotone(self, tol: float = 1e-9) -> bool:
        """Stronger players never fare worse against weaker opposition.

        For i < j < k: p[i][k] >= p[i][j] and p[i][k] >= p[j][k].
        Equivalent to rows non-decreasing left to right and columns
        non-increasing top to bottom, off the diagonal.
        """
        p = self.p
        for i in range(self.n):
            row = np.delete(p[i], i)
            if np.any(np.diff(row) < -tol):
                return False
        for j in range(self.n):
            col = np.delete(p[:, j], j)
            if np.any(np.diff(col) > tol):
                return False
        return True


def skill_matrix(model: SkillModel, n: int) -> WinMatrix:
    """Winning probabilities under the linear skill model.

    Player a beats player b with probability
    ``clamp(1 - (skill * (a - b) / 100 + 0.5), 0, 1)``: a uniform roll
    must exceed a threshold that shifts linearly with the rank gap. The
    clamp saturates large gaps at certain wins.
    """
    if n < 2:
        raise ValueError("need at least 2 players")
    ranks = np.arange(1, n + 1, dtype=float)
    threshold = model.skill * (ranks[:, None] - ranks[None, :]) / 100.0 + 0.5
    p = np.clip(1.0 - threshold, 0.0, 1.0)
    np.fill_diagonal(p, 0.5)
    return WinMatrix(n, p)


def elo_matrix(table: RatingTable) -> tuple[WinMatrix, tuple[str, ...]]:
    """Winning probabilities from Elo ratings.

    Players are sorted by rating descending (ties broken by name) to fix
    the true ranks; the pairwise probability is the standard logistic
    expectation ``1 / (1 + 10**(-(Ra - Rb) / 400))``. Returns the matrix
    plus the rank-ordered player names.
    """
    ordered = sorted(table.entries, key=lambda e: (-e[1], e[0]))
    ratings = np.array([r for _, r in ordered], dtype=float)
    names = tuple(name for name, _ in ordered)
    diff = ratings[:, None] - ratings[None, :]
    p = 1.0 / (1.0 + np.power(10.0, -diff / 400.0))
    np.fill_diagonal(p, 0.5)
    return WinMatrix(len(names), p), names


def uniform_matrix(n: int) -> WinMatrix:
    """Every match is a coin flip."""
    return WinMatrix(n, np.full((n, n), 0.5))


def deterministic_matrix(n: int) -> WinMatrix:
    """The stronger player always wins; useful as a fixed point in tests."""
    p = np.zeros((n, n))
    for i in range(n):
        p[i, i + 1 :] = 1.0
        p[i, i] = 0.5
    return WinMatrix(n, p)


def sample_match(m: WinMatrix, a: PlayerId, b: PlayerId, rng: random.Random) -> PlayerId:
    """Sample one match between a and b, consuming exactly one uniform draw."""
    if a == b:
        raise ValueError("a player cannot play itself")
    return a if rng.random() < m.p[a - 1, b - 1] else b


class MatchSampler:
    """Stream of random match outcomes and random orderings for one replication.

    Wraps a probability matrix and one private ``random.Random`` stream;
    never share a sampler between replications.
    """

    __slots__ = ("rows", "rng", "n")

    def __init__(self, matrix: WinMatrix, rng: random.Random) -> None:
        self.rows = matrix.rows()
        self.rng = rng
        self.n = matrix.n

    def win(self, a: PlayerId, b: PlayerId) -> PlayerId:
        return a if self.rng.random() < self.rows[a - 1][b - 1] else b

    def win_many(self, pairs: Sequence[tuple[PlayerId, PlayerId]]) -> list[PlayerId]:
        rnd = self.rng.random
        rows = self.rows
        return [a if rnd() < rows[a - 1][b - 1] else b for a, b in pairs]

    def order(self, items: Iterable) -> list:
        """Uniformly random permutation of ``items``."""
        rnd = self.rng.random
        return sorted(items, key=lambda _: rnd())

    def tie_fallback_order(self, items: Iterable) -> list:
        """Order used when tie-break recursion is cut off; uniform here."""
        return self.order(items)


def load_rating_csv(path: str) -> RatingTable:
    """Parse a rating file: UTF-8 CSV with header ``name,rating``.

    Malformed rows are rejected with the offending line number.
    """
    entries: list[tuple[str, float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise RatingFileError(f"{path}:1: empty rating file") from None
        if [h.strip().lower() for h in header] != ["name", "rating"]:
            raise RatingFileError(f"{path}:1: expected header 'name,rating', got {','.join(header)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise RatingFileError(f"{path}:{lineno}: expected 2 fields, got {len(row)}")
            name = row[0].strip()
            if not name:
                raise RatingFileError(f"{path}:{lineno}: empty player name")
            try:
                rating = float(row[1])
            except ValueError:
                raise RatingFileError(f"{path}:{lineno}: invalid rating {row[1]!r}") from None
            entries.append((name, rating))
    if len(entries) < 2:
        raise RatingFileError(f"{path}: need at least 2 rating entries")
    try:
        return RatingTable(tuple(entries))
    except ValueError as exc:
        raise RatingFileError(f"{path}: {exc}") from None


def load_matrix_csv(path: str) -> WinMatrix:
    """Parse an explicit n-by-n probability matrix from CSV.

    The matrix must satisfy the complement identity (p_ij + p_ji = 1)
    and the strength monotonicity invariant.
    """
    rows: list[list[float]] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError:
                raise RatingFileError(f"{path}:{lineno}: non-numeric matrix entry") from None
    n = len(rows)
    if n < 2 or any(len(r) != n for r in rows):
        raise RatingFileError(f"{path}: expected a square matrix with n >= 2, got {n} rows")
    p = np.array(rows)
    if np.any(p < 0) or np.any(p > 1):
        raise RatingFileError(f"{path}: probabilities must lie in [0, 1]")
    m = WinMatrix(n, p)
    if not m.check_complement(tol=1e-6):
        raise RatingFileError(f"{path}: matrix violates p_ij + p_ji = 1")
    if not m.check_monotone(tol=1e-6):
        raise RatingFileError(f"{path}: matrix violates strength monotonicity")
    return m
