"""Swiss-system tournament engine.

Players are paired round by round: equal scores meet whenever possible
and no pair ever meets twice. The normative pairing rule orders players
by (score descending, random tie order drawn once per round) and pairs
the first unpaired player with the earliest-ordered compatible opponent
that leaves the remaining players pairable, backtracking when necessary.

Implementation note: a depth-first search that commits the earliest
compatible opponent first and returns its first complete matching
produces exactly that pairing, because the feasibility check in the
normative rule is equivalent to asking whether the search can complete
from the resulting position. The plain greedy pass handled inline is
just the first branch of that search; the full search only runs when
the greedy pass jams, which is rare on the dense compatibility graphs
of short tournaments.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .formats import Seeding
from .model import MatchLog, MatchRecord, PlayerId, TournamentResult
from .prob import MatchSampler, WinMatrix


class UnpairableRoundError(RuntimeError):
    """No rematch-free perfect matching exists for the requested round."""


@dataclass
class SwissState:
    """Mutable per-tournament pairing state."""

    n: int
    round: int = 0
    scores: dict[PlayerId, int] = field(default_factory=dict)
    played: set[frozenset[PlayerId]] = field(default_factory=set)
    history: list[MatchRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.scores:
            self.scores = {p: 0 for p in range(1, self.n + 1)}


def pair_in_order(order: Sequence[PlayerId], played: Iterable[frozenset[PlayerId]]) -> list[tuple[PlayerId, PlayerId]]:
    """Deterministic pairing core: pair ``order`` without rematches.

    Returns the unique matching produced by the normative
    highest-score-first rule for this player order. Raises
    UnpairableRoundError when no rematch-free perfect matching exists.
    """
    m = len(order)
    if m % 2:
        raise UnpairableRoundError("cannot pair an odd number of players")
    pos = {p: i for i, p in enumerate(order)}
    adj = [((1 << m) - 1) ^ (1 << i) for i in range(m)]
    for pair in played:
        a, b = tuple(pair)
        if a in pos and b in pos:
            adj[pos[a]] &= ~(1 << pos[b])
            adj[pos[b]] &= ~(1 << pos[a])
    pairs_pos = _pair_search(adj)
    if pairs_pos is None:
        raise UnpairableRoundError("no rematch-free perfect matching exists")
    return [(order[i], order[j]) for i, j in pairs_pos]


def _pair_search(adj: list[int]) -> list[tuple[int, int]] | None:
    """First-solution DFS over pairings (see module docstring).

    ``adj[i]`` is the bitmask of positions compatible with position i;
    positions are already sorted by pairing priority. While the players
    still unpaired outnumber twice the worst degree deficit, a perfect
    matching among them is guaranteed (Dirac bound), so commits need no
    feasibility checks. Below the bound, a branch is pruned when it
    would isolate one of the low-degree vertices, which cannot change
    the first solution, only skip provably dead subtrees.
    """
    m = len(adj)
    full = (1 << m) - 1
    min_degree = m
    for bits in adj:
        if not bits:
            return None
        d = bits.bit_count()
        if d < min_degree:
            min_degree = d
    guarantee = 2 * (m - min_degree)
    dead: set[int] = set()
    chosen: list[tuple[int, int]] = []

    def search(remaining: int) -> bool:
        if not remaining:
            return True
        ibit = remaining & -remaining
        i = ibit.bit_length() - 1
        adj_i = adj[i]
        cand = adj_i & remaining
        if remaining.bit_count() >= guarantee + 2:
            # Dense region: the remainder after any compatible commit
            # still satisfies the degree bound, so it stays matchable.
            jbit = cand & -cand
            j = jbit.bit_length() - 1
            if search(remaining ^ ibit ^ jbit):
                chosen.append((i, j))
                return True
            raise AssertionError("matching guarantee violated")
        if remaining in dead:
            return False
        # Only vertices with <= 2 live neighbours can be isolated by
        # removing one pair; collect them once for this node.
        weak = 0
        x = remaining
        while x:
            low = x & -x
            x ^= low
            if (adj[low.bit_length() - 1] & remaining).bit_count() <= 2:
                weak |= low
        while cand:
            jbit = cand & -cand
            cand ^= jbit
            j = jbit.bit_length() - 1
            rest = remaining ^ ibit ^ jbit
            ok = True
            w = weak & rest
            while w:
                low = w & -w
                w ^= low
                if not adj[low.bit_length() - 1] & rest:
                    ok = False
                    break
            if ok and search(rest):
                chosen.append((i, j))
                return True
        dead.add(remaining)
        return False

    if not search(full):
        return None
    chosen.reverse()
    return chosen


def _round_order(players: Sequence[PlayerId], scores: dict[PlayerId, int],
                 rng: random.Random, seeding: Seeding) -> list[PlayerId]:
    if seeding is Seeding.DETERMINISTIC:
        return sorted(players, key=lambda p: (-scores[p], p))
    rnd = rng.random
    return sorted(players, key=lambda p: (-scores[p], rnd()))


def pair_round(state: SwissState, rng: random.Random, *, seeding: Seeding = Seeding.RANDOM) -> list[tuple[PlayerId, PlayerId]]:
    """Pair the next round.

    Round 1 is a uniformly random perfect matching; later rounds follow
    the normative highest-score-first rule with a fresh random order
    inside every score group.
    """
    players = sorted(state.scores)
    if state.round == 0:
        if seeding is Seeding.DETERMINISTIC:
            order = players
        else:
            rnd = rng.random
            order = sorted(players, key=lambda _: rnd())
        return [(order[i], order[i + 1]) for i in range(0, len(order), 2)]
    order = _round_order(players, state.scores, rng, seeding)
    return pair_in_order(order, state.played)


def buchholz(history: Sequence[MatchRecord], scores: dict[PlayerId, int]) -> dict[PlayerId, float]:
    """Strength-of-schedule scores: sum of all opponents' final scores."""
    totals = {p: 0.0 for p in scores}
    for rec in history:
        totals[rec.white] += scores[rec.black]
        totals[rec.black] += scores[rec.white]
    return totals


def _run_swiss(sampler, log, n: int, rounds: int, seeding: Seeding) -> list[PlayerId]:
    """Play a full Swiss tournament; returns the final strict ranking."""
    players = list(range(1, n + 1))
    scores = dict.fromkeys(players, 0)
    played_mask = dict.fromkeys(players, 0)
    opponents: dict[PlayerId, list[PlayerId]] = {p: [] for p in players}
    h2h: dict[tuple[PlayerId, PlayerId], PlayerId] = {}
    win = sampler.win
    recording = log.recording
    rng = getattr(sampler, "rng", None)

    for rnd_no in range(1, rounds + 1):
        if rnd_no == 1:
            if seeding is Seeding.DETERMINISTIC:
                order = players
            else:
                order = sampler.order(players)
            pairs = [(order[i], order[i + 1]) for i in range(0, n, 2)]
        else:
            if seeding is Seeding.DETERMINISTIC:
                order = sorted(players, key=lambda p: (-scores[p], p))
            elif rng is not None:
                rnd = rng.random
                order = sorted(players, key=lambda p: (-scores[p], rnd()))
            else:
                shuffled = sampler.order(players)
                order = sorted(shuffled, key=lambda p: -scores[p])
            pairs = _pair_greedy(order, played_mask)
            if pairs is None:
                pairs_pos = _pair_search(_packed_adjacency(played_mask, order, n))
                if pairs_pos is None:
                    raise UnpairableRoundError(
                        f"round {rnd_no}: no rematch-free perfect matching exists "
                        f"(swiss rounds too large for n={n})"
                    )
                pairs = [(order[i], order[j]) for i, j in pairs_pos]
        stage = f"swiss-round-{rnd_no}"
        for a, b in pairs:
            w = win(a, b)
            scores[w] += 1
            played_mask[a] |= 1 << (b - 1)
            played_mask[b] |= 1 << (a - 1)
            opponents[a].append(b)
            opponents[b].append(a)
            h2h[(a, b) if a < b else (b, a)] = w
            if recording:
                log.add(stage, a, b, w, True)
        if not recording:
            log.counted += len(pairs)

    buch = {p: 0 for p in players}
    for p in players:
        buch[p] = sum(scores[o] for o in opponents[p])

    # Final order: wins, then Buchholz, then head-to-head for tied pairs
    # that met, then uniform random (rank order under the test hook).
    groups: dict[tuple[int, int], list[PlayerId]] = {}
    for p in players:
        groups.setdefault((-scores[p], -buch[p]), []).append(p)
    ranking: list[PlayerId] = []
    for key in sorted(groups):
        group = groups[key]
        if len(group) == 1:
            ranking.append(group[0])
        elif len(group) == 2:
            a, b = group
            winner = h2h.get((a, b) if a < b else (b, a))
            if winner is not None:
                loser = b if winner == a else a
                ranking.extend((winner, loser))
            elif seeding is Seeding.DETERMINISTIC:
                ranking.extend(sorted(group))
            else:
                ranking.extend(sampler.order(group))
        elif seeding is Seeding.DETERMINISTIC:
            ranking.extend(sorted(group))
        else:
            ranking.extend(sampler.order(group))
    return ranking


def _pair_greedy(order: list[PlayerId], played_mask: dict[PlayerId, int]) -> list[tuple[PlayerId, PlayerId]] | None:
    """Pair each player with the earliest compatible opponent; None on jam.

    A completed greedy pass is the first branch of the backtracking
    search, so its result already is the normative pairing; the caller
    falls back to the full search when this returns None.
    """
    m = len(order)
    used = bytearray(m)
    pairs: list[tuple[PlayerId, PlayerId]] = []
    for i in range(m):
        if used[i]:
            continue
        a = order[i]
        mask = played_mask[a]
        for j in range(i + 1, m):
            if not used[j] and not (mask >> (order[j] - 1)) & 1:
                pairs.append((a, order[j]))
                used[i] = used[j] = 1
                break
        else:
            return None
    return pairs


def _packed_adjacency(played_mask: dict[PlayerId, int], order: list[PlayerId], n: int) -> list[int]:
    """Position-space adjacency bitmasks for the players in ``order``."""
    m = len(order)
    nbytes = (n + 7) // 8
    blob = b"".join(played_mask[p].to_bytes(nbytes, "little") for p in order)
    played = np.unpackbits(np.frombuffer(blob, dtype=np.uint8).reshape(m, nbytes),
                           axis=1, bitorder="little")[:, :n]
    idx = np.fromiter((p - 1 for p in order), dtype=np.intp, count=m)
    compat = played[:, idx] == 0
    np.fill_diagonal(compat, False)
    packed = np.packbits(compat, axis=1, bitorder="little")
    out = packed.tobytes()
    width = packed.shape[1]
    return [int.from_bytes(out[k * width : (k + 1) * width], "little") for k in range(m)]


def run_swiss(matrix: WinMatrix, n: int, rounds: int, rng: random.Random, *,
              seeding: Seeding = Seeding.RANDOM) -> TournamentResult:
    """Play a Swiss tournament over ``rounds`` rounds with a full match log."""
    if n < 2 or n % 2:
        raise ValueError("swiss needs an even number of players")
    if not 1 <= rounds <= n - 1:
        raise ValueError("need 1 <= rounds <= n - 1")
    if matrix.n != n:
        raise ValueError(f"matrix is {matrix.n}x{matrix.n} but n={n}")
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _run_swiss(sampler, log, n, rounds, seeding)
    return TournamentResult.from_log(ranking, log.records)
