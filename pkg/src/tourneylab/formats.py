"""Tournament format engines.

Every engine consumes a winning-probability matrix plus a random stream
and produces a strict ranking of all players together with a match log.
Uncounted tie-break matches (stage names containing "tiebreak") resolve
standings but do not contribute to a format's match budget.

The Swiss engine lives in :mod:`tourneylab.swiss`; everything else is
here, with :func:`run_format` as the single dispatch point.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

from .model import MatchLog, PlayerId, TournamentResult
from .prob import MatchSampler, WinMatrix

GROUP_LETTERS = "ABCDEFGHIJKLMNOP"


class FormatKind(str, Enum):
    ROUND_ROBIN = "rr"
    DOUBLE_ROUND_ROBIN = "drr"
    KNOCKOUT = "ko"
    TRIPLE_KNOCKOUT = "ko3"
    DRAW_AND_PROCESS = "dp"
    MULTISTAGE_4 = "ms4"
    MULTISTAGE_8 = "ms8"
    DOUBLE_GROUP = "dg"
    SWISS = "swiss"


class Seeding(Enum):
    """How structural draws (brackets, group deals, tie orders) are made.

    RANDOM is the normal mode. DETERMINISTIC replaces every random draw
    with a reproducible rank-based one (seeded brackets, modular group
    deals, rank-ordered residual ties); it exists as a test hook so that
    a deterministic matrix yields the identity ranking.
    """

    RANDOM = "random"
    DETERMINISTIC = "deterministic"


@dataclass(frozen=True)
class TieBreakPolicy:
    """Termination control for recursive round-robin tie-breaking.

    ``replay_cap``: after this many mini tournaments reproduce the
    identical tie set, remaining ties are broken uniformly at random.
    ``max_depth``: hard recursion cutoff used by the enumeration oracle;
    branches beyond it fall back to a uniform order.
    """

    replay_cap: int = 10
    max_depth: int | None = None


DEFAULT_TIES = TieBreakPolicy()


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


def _ko_match_count(n: int) -> int:
    return n * (n.bit_length() - 1) // 2


@dataclass(frozen=True)
class FormatSpec:
    """A fully parameterised tournament design."""

    kind: FormatKind
    n: int = 32
    swiss_rounds: int | None = None
    constrained_draw: bool = True
    seeding: Seeding = Seeding.RANDOM

    def __post_init__(self) -> None:
        kind, n = self.kind, self.n
        if self.swiss_rounds is not None and kind is not FormatKind.SWISS:
            raise ValueError("swiss_rounds is only valid for the swiss format")
        if kind in (FormatKind.ROUND_ROBIN, FormatKind.DOUBLE_ROUND_ROBIN):
            if n < 2:
                raise ValueError("round-robin needs n >= 2")
        elif kind in (FormatKind.KNOCKOUT, FormatKind.TRIPLE_KNOCKOUT):
            if n < 4 or not _is_power_of_two(n):
                raise ValueError("knockout needs n a power of two, n >= 4")
        elif kind is FormatKind.DRAW_AND_PROCESS:
            if n < 8 or not _is_power_of_two(n):
                raise ValueError("draw-and-process needs n a power of two, n >= 8")
        elif kind is FormatKind.MULTISTAGE_8:
            if n < 16 or not _is_power_of_two(n) or (n // 8) % 2:
                raise ValueError("multi-stage with 8 groups needs n a power of two with even groups of n/8")
        elif kind is FormatKind.MULTISTAGE_4:
            if n < 8 or not _is_power_of_two(n) or (n // 4) % 2:
                raise ValueError("multi-stage with 4 groups needs n a power of two with even groups of n/4")
        elif kind is FormatKind.DOUBLE_GROUP:
            if n != 32:
                raise ValueError("double group is defined for n = 32")
        elif kind is FormatKind.SWISS:
            if n < 2 or n % 2:
                raise ValueError("swiss needs an even number of players")
            if self.swiss_rounds is None or not 1 <= self.swiss_rounds <= n - 1:
                raise ValueError("swiss needs 1 <= swiss_rounds <= n - 1")

    @property
    def counted_matches(self) -> int:
        """Match budget of this format (tie-break matches excluded)."""
        n = self.n
        if self.kind is FormatKind.ROUND_ROBIN:
            return n * (n - 1) // 2
        if self.kind is FormatKind.DOUBLE_ROUND_ROBIN:
            return n * (n - 1)
        if self.kind is FormatKind.KNOCKOUT:
            return _ko_match_count(n)
        if self.kind is FormatKind.TRIPLE_KNOCKOUT:
            return 3 * _ko_match_count(n)
        if self.kind is FormatKind.DRAW_AND_PROCESS:
            return 2 * _ko_match_count(n)
        if self.kind is FormatKind.MULTISTAGE_8:
            size = n // 8
            return 8 * size * (size - 1) // 2 + 2 * _ko_match_count(n // 2)
        if self.kind is FormatKind.MULTISTAGE_4:
            size = n // 4
            return 4 * size * (size - 1) // 2 + 2 * _ko_match_count(n // 2)
        if self.kind is FormatKind.DOUBLE_GROUP:
            return 4 * 28 + 8 * 6 + 4 * _ko_match_count(8)
        if self.kind is FormatKind.SWISS:
            return (n // 2) * self.swiss_rounds
        raise AssertionError(self.kind)

    @property
    def label(self) -> str:
        if self.kind is FormatKind.SWISS:
            return f"swiss-{self.swiss_rounds}"
        return self.kind.value

    @property
    def param(self) -> str:
        return str(self.swiss_rounds) if self.kind is FormatKind.SWISS else ""


# -- brackets ---------------------------------------------------------


def bit_reverse(x: int, bits: int) -> int:
    out = 0
    for _ in range(bits):
        out = (out << 1) | (x & 1)
        x >>= 1
    return out


def seeded_bracket(n: int) -> tuple[PlayerId, ...]:
    """Bracket in which the stronger player wins every place outright.

    Slot s holds player bit_reverse(s-1) + 1, so seeds 1 and 2 can only
    meet in the final, 3 and 4 no earlier than the semifinal, and so on
    recursively. Used as the deterministic test hook.
    """
    bits = n.bit_length() - 1
    if not _is_power_of_two(n):
        raise ValueError("bracket size must be a power of two")
    return tuple(bit_reverse(s, bits) + 1 for s in range(n))


def bracket_meeting_round(slot_a: int, slot_b: int) -> int:
    """First round in which two 1-based bracket slots can meet."""
    if slot_a == slot_b:
        raise ValueError("slots must differ")
    return ((slot_a - 1) ^ (slot_b - 1)).bit_length()


def _check_bracket(bracket: Sequence[PlayerId]) -> None:
    if len(bracket) < 2 or not _is_power_of_two(len(bracket)):
        raise ValueError("bracket length must be a power of two, >= 2")
    if len(set(bracket)) != len(bracket):
        raise ValueError("bracket contains duplicate players")


# -- round-robin with recursive tie-breaking --------------------------


def _play_round_robin_matches(sampler, log, players: Sequence[PlayerId], stage: str,
                              counted: bool, passes: int) -> dict[PlayerId, int]:
    """Play every pair ``passes`` times; return win counts."""
    wins = dict.fromkeys(players, 0)
    recording = log.recording
    g = len(players)
    rng = getattr(sampler, "rng", None)
    if rng is not None and not recording:
        # Hot path for bulk Monte Carlo: inline the outcome draw.
        rnd = rng.random
        rows = sampler.rows
        for _ in range(passes):
            for i in range(g - 1):
                a = players[i]
                row = rows[a - 1]
                for j in range(i + 1, g):
                    b = players[j]
                    wins[a if rnd() < row[b - 1] else b] += 1
        total = passes * g * (g - 1) // 2
        if counted:
            log.counted += total
        else:
            log.uncounted += total
        return wins
    win = sampler.win
    for _ in range(passes):
        for i in range(g - 1):
            a = players[i]
            for j in range(i + 1, g):
                b = players[j]
                w = win(a, b)
                wins[w] += 1
                log.add(stage, a, b, w, counted)
    return wins


def _bucket_by_wins(players: Sequence[PlayerId], wins: dict[PlayerId, int]) -> list[list[PlayerId]]:
    buckets: dict[int, list[PlayerId]] = {}
    for p in players:
        buckets.setdefault(wins[p], []).append(p)
    return [buckets[w] for w in sorted(buckets, reverse=True)]


def _fallback_order(sampler, group: Sequence[PlayerId], seeding: Seeding) -> list[PlayerId]:
    if seeding is Seeding.DETERMINISTIC:
        return sorted(group)
    return sampler.tie_fallback_order(group)


def _resolve_ties(sampler, log, group: Sequence[PlayerId], passes: int,
                  policy: TieBreakPolicy, seeding: Seeding, depth: int) -> list[PlayerId]:
    """Order a tied group by recursive mini round-robins.

    Mini tournaments mirror the outer structure (single or double) and
    are logged as uncounted. A group that keeps reproducing itself is
    eventually ordered uniformly at random (or by rank under the
    deterministic seeding hook).
    """
    if policy.max_depth is not None and depth > policy.max_depth:
        return _fallback_order(sampler, group, seeding)
    current = list(group)
    replays = 0
    while True:
        wins = _play_round_robin_matches(sampler, log, current, "tiebreak", False, passes)
        buckets = _bucket_by_wins(current, wins)
        if len(buckets) == 1:
            replays += 1
            if replays >= policy.replay_cap:
                return _fallback_order(sampler, current, seeding)
            if policy.max_depth is not None and depth + replays > policy.max_depth:
                return _fallback_order(sampler, current, seeding)
            continue
        out: list[PlayerId] = []
        for bucket in buckets:
            if len(bucket) == 1:
                out.append(bucket[0])
            else:
                out.extend(_resolve_ties(sampler, log, bucket, passes, policy, seeding, depth + 1))
        return out


def _rank_round_robin(sampler, log, players: Sequence[PlayerId], passes: int, stage: str,
                      policy: TieBreakPolicy, seeding: Seeding) -> list[PlayerId]:
    """Full round-robin standings with ties resolved recursively."""
    wins = _play_round_robin_matches(sampler, log, players, stage, True, passes)
    out: list[PlayerId] = []
    for bucket in _bucket_by_wins(players, wins):
        if len(bucket) == 1:
            out.append(bucket[0])
        else:
            out.extend(_resolve_ties(sampler, log, bucket, passes, policy, seeding, depth=1))
    return out


# -- placement knockout ------------------------------------------------


def _placement_knockout(sampler, log, bracket: Sequence[PlayerId], stage_prefix: str,
                        best_of: int = 1) -> list[PlayerId]:
    """Knockout in which losers keep playing for every place.

    Each round splits every active sub-bracket into a winners' and a
    losers' sub-bracket (in bracket order); after log2(n) rounds the
    sub-brackets are singletons whose concatenation is the final
    ranking. With ``best_of=3`` every pairing plays all three games and
    the majority advances, keeping the match count constant.
    """
    brackets: list[list[PlayerId]] = [list(bracket)]
    rounds = len(bracket).bit_length() - 1
    recording = log.recording
    for rnd in range(1, rounds + 1):
        stage = f"{stage_prefix}round-{rnd}"
        pairs: list[tuple[PlayerId, PlayerId]] = []
        for b in brackets:
            pairs.extend((b[i], b[i + 1]) for i in range(0, len(b), 2))
        if best_of == 1:
            winners = sampler.win_many(pairs)
            if recording:
                for (a, b), w in zip(pairs, winners):
                    log.add(stage, a, b, w, True)
            else:
                log.counted += len(pairs)
        else:
            games = [sampler.win_many(pairs) for _ in range(best_of)]
            if recording:
                for g in games:
                    for (a, b), w in zip(pairs, g):
                        log.add(stage, a, b, w, True)
            else:
                log.counted += best_of * len(pairs)
            need = best_of // 2 + 1
            winners = []
            for k, (a, opponent) in enumerate(pairs):
                a_wins = sum(1 for g in games if g[k] == a)
                winners.append(a if a_wins >= need else opponent)
        nxt: list[list[PlayerId]] = []
        idx = 0
        for b in brackets:
            won: list[PlayerId] = []
            lost: list[PlayerId] = []
            for i in range(0, len(b), 2):
                a, c = b[i], b[i + 1]
                w = winners[idx]
                idx += 1
                won.append(w)
                lost.append(c if w == a else a)
            nxt.append(won)
            nxt.append(lost)
        brackets = nxt
    return [b[0] for b in brackets]


# -- draw and process ---------------------------------------------------


def _merge_walk(sampler, log, draw: Sequence[PlayerId], process: Sequence[PlayerId]) -> list[PlayerId]:
    """Merge two strict rankings position by position.

    At each position: the same player in both gets the next place; one
    already-placed and one new player places the new one; two new
    players play an uncounted tiebreaker for the next two places; two
    already-placed players just advance the position pointer.
    """
    placed: set[PlayerId] = set()
    final: list[PlayerId] = []
    for pos in range(len(draw)):
        d, p = draw[pos], process[pos]
        if d == p:
            if d not in placed:
                final.append(d)
                placed.add(d)
            continue
        d_in, p_in = d in placed, p in placed
        if d_in and p_in:
            continue
        if d_in:
            final.append(p)
            placed.add(p)
        elif p_in:
            final.append(d)
            placed.add(d)
        else:
            w = sampler.win(d, p)
            log.add("merge-tiebreak", d, p, w, False)
            loser = p if w == d else d
            final.append(w)
            final.append(loser)
            placed.add(d)
            placed.add(p)
    return final


def _draw_and_process(sampler, log, draw_bracket: Sequence[PlayerId],
                      seeding: Seeding = Seeding.RANDOM) -> list[PlayerId]:
    n = len(draw_bracket)
    bits = n.bit_length() - 1
    draw_rank = _placement_knockout(sampler, log, draw_bracket, "draw-")
    if seeding is Seeding.DETERMINISTIC:
        # Test hook: run both halves over the same winner-friendly bracket
        # so the merge sees two identical rankings. The bit-reversal
        # separation used in normal mode is audited by its own test.
        process_bracket = list(draw_bracket)
    else:
        process_bracket = [0] * n
        for s, player in enumerate(draw_bracket):
            process_bracket[bit_reverse(s, bits)] = player
    process_rank = _placement_knockout(sampler, log, process_bracket, "process-")
    return _merge_walk(sampler, log, draw_rank, process_rank)


# -- group formats -------------------------------------------------------


def _deal_groups(sampler, players: Sequence[PlayerId], n_groups: int, seeding: Seeding) -> list[list[PlayerId]]:
    if seeding is Seeding.DETERMINISTIC:
        ordered = sorted(players)
        return [ordered[g::n_groups] for g in range(n_groups)]
    perm = sampler.order(players)
    size = len(players) // n_groups
    return [perm[g * size : (g + 1) * size] for g in range(n_groups)]


def _draw_ko_bracket(sampler, entrants: Sequence[PlayerId], group_of: dict[PlayerId, int],
                     seeding: Seeding, constrained: bool) -> list[PlayerId]:
    """Random bracket, optionally forbidding same-group pairs in round 1."""
    if seeding is Seeding.DETERMINISTIC:
        ordered = sorted(entrants)
        bits = len(entrants).bit_length() - 1
        return [ordered[bit_reverse(s, bits)] for s in range(len(entrants))]
    while True:
        perm = sampler.order(entrants)
        if not constrained:
            return perm
        if all(group_of[perm[i]] != group_of[perm[i + 1]] for i in range(0, len(perm), 2)):
            return perm


def _multistage(sampler, log, n: int, n_groups: int, policy: TieBreakPolicy,
                seeding: Seeding, constrained: bool) -> list[PlayerId]:
    players = list(range(1, n + 1))
    groups = _deal_groups(sampler, players, n_groups, seeding)
    half = len(groups[0]) // 2
    upper: list[PlayerId] = []
    lower: list[PlayerId] = []
    group_of: dict[PlayerId, int] = {}
    for gi, members in enumerate(groups):
        ranking = _rank_round_robin(sampler, log, members, 1, f"group-{GROUP_LETTERS[gi]}", policy, seeding)
        upper.extend(ranking[:half])
        lower.extend(ranking[half:])
        for p in members:
            group_of[p] = gi
    upper_bracket = _draw_ko_bracket(sampler, upper, group_of, seeding, constrained)
    lower_bracket = _draw_ko_bracket(sampler, lower, group_of, seeding, constrained)
    out = _placement_knockout(sampler, log, upper_bracket, "upper-ko-")
    out += _placement_knockout(sampler, log, lower_bracket, "lower-ko-")
    return out


# Stage-2 group composition for the double group format: each new group
# takes one player per stage-1 group with all four finishing positions
# represented, so no stage-1 opponents meet again in stage 2.
_CROSSING = (
    ((0, 0), (1, 1), (2, 2), (3, 3)),
    ((1, 0), (0, 1), (3, 2), (2, 3)),
    ((2, 0), (3, 1), (0, 2), (1, 3)),
    ((3, 0), (2, 1), (1, 2), (0, 3)),
)


def _double_group_half(sampler, log, s1_rankings: list[list[PlayerId]], offset: int,
                       tag: str, policy: TieBreakPolicy, seeding: Seeding,
                       constrained: bool) -> list[PlayerId]:
    top: list[PlayerId] = []
    bottom: list[PlayerId] = []
    group_of: dict[PlayerId, int] = {}
    for gi, cross in enumerate(_CROSSING):
        members = [s1_rankings[g][offset + pos] for g, pos in cross]
        ranking = _rank_round_robin(sampler, log, members, 1, f"stage2-{tag}-{gi + 1}", policy, seeding)
        top.extend(ranking[:2])
        bottom.extend(ranking[2:])
        for p in members:
            group_of[p] = gi
    top_bracket = _draw_ko_bracket(sampler, top, group_of, seeding, constrained)
    bottom_bracket = _draw_ko_bracket(sampler, bottom, group_of, seeding, constrained)
    out = _placement_knockout(sampler, log, top_bracket, f"{tag}-ko-a-")
    out += _placement_knockout(sampler, log, bottom_bracket, f"{tag}-ko-b-")
    return out


def _double_group(sampler, log, n: int, policy: TieBreakPolicy, seeding: Seeding,
                  constrained: bool) -> list[PlayerId]:
    players = list(range(1, n + 1))
    groups = _deal_groups(sampler, players, 4, seeding)
    s1_rankings = [
        _rank_round_robin(sampler, log, members, 1, f"stage1-group-{GROUP_LETTERS[gi]}", policy, seeding)
        for gi, members in enumerate(groups)
    ]
    out = _double_group_half(sampler, log, s1_rankings, 0, "upper", policy, seeding, constrained)
    out += _double_group_half(sampler, log, s1_rankings, 4, "lower", policy, seeding, constrained)
    return out


# -- dispatch ------------------------------------------------------------


def _initial_bracket(sampler, n: int, seeding: Seeding) -> Sequence[PlayerId]:
    if seeding is Seeding.DETERMINISTIC:
        return seeded_bracket(n)
    return sampler.order(range(1, n + 1))


def _run_format(spec: FormatSpec, sampler, log, policy: TieBreakPolicy = DEFAULT_TIES) -> list[PlayerId]:
    """Run one tournament, returning the ranking; matches go to ``log``."""
    kind, n, seeding = spec.kind, spec.n, spec.seeding
    if kind is FormatKind.ROUND_ROBIN:
        return _rank_round_robin(sampler, log, list(range(1, n + 1)), 1, "rr", policy, seeding)
    if kind is FormatKind.DOUBLE_ROUND_ROBIN:
        return _rank_round_robin(sampler, log, list(range(1, n + 1)), 2, "rr", policy, seeding)
    if kind is FormatKind.KNOCKOUT:
        return _placement_knockout(sampler, log, _initial_bracket(sampler, n, seeding), "ko-")
    if kind is FormatKind.TRIPLE_KNOCKOUT:
        return _placement_knockout(sampler, log, _initial_bracket(sampler, n, seeding), "ko-", best_of=3)
    if kind is FormatKind.DRAW_AND_PROCESS:
        return _draw_and_process(sampler, log, _initial_bracket(sampler, n, seeding), seeding)
    if kind is FormatKind.MULTISTAGE_4:
        return _multistage(sampler, log, n, 4, policy, seeding, spec.constrained_draw)
    if kind is FormatKind.MULTISTAGE_8:
        return _multistage(sampler, log, n, 8, policy, seeding, spec.constrained_draw)
    if kind is FormatKind.DOUBLE_GROUP:
        return _double_group(sampler, log, n, policy, seeding, spec.constrained_draw)
    if kind is FormatKind.SWISS:
        from .swiss import _run_swiss

        return _run_swiss(sampler, log, n, spec.swiss_rounds, seeding)
    raise AssertionError(kind)


def run_format(spec: FormatSpec, matrix: WinMatrix, rng: random.Random) -> TournamentResult:
    """Run one tournament with a full match log."""
    if matrix.n != spec.n:
        raise ValueError(f"matrix is {matrix.n}x{matrix.n} but the format needs n={spec.n}")
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _run_format(spec, sampler, log)
    return TournamentResult.from_log(ranking, log.records)


# -- public single-format entry points -----------------------------------


def run_round_robin(matrix: WinMatrix, players: Sequence[PlayerId], double: bool,
                    rng: random.Random, *, seeding: Seeding = Seeding.RANDOM) -> TournamentResult:
    ordered = sorted(players)
    if len(ordered) < 2 or len(set(ordered)) != len(ordered):
        raise ValueError("need at least 2 distinct players")
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _rank_round_robin(sampler, log, ordered, 2 if double else 1, "rr", DEFAULT_TIES, seeding)
    return TournamentResult.from_log(ranking, log.records)


def run_placement_knockout(matrix: WinMatrix, bracket: Sequence[PlayerId], rng: random.Random) -> TournamentResult:
    _check_bracket(bracket)
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _placement_knockout(sampler, log, bracket, "ko-")
    return TournamentResult.from_log(ranking, log.records)


def run_triple_knockout(matrix: WinMatrix, bracket: Sequence[PlayerId], rng: random.Random) -> TournamentResult:
    _check_bracket(bracket)
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _placement_knockout(sampler, log, bracket, "ko-", best_of=3)
    return TournamentResult.from_log(ranking, log.records)


def run_draw_and_process(matrix: WinMatrix, draw_bracket: Sequence[PlayerId], rng: random.Random) -> TournamentResult:
    _check_bracket(draw_bracket)
    if len(draw_bracket) < 8:
        raise ValueError("draw-and-process needs n >= 8")
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    ranking = _draw_and_process(sampler, log, draw_bracket)
    return TournamentResult.from_log(ranking, log.records)


def merge_rankings(draw: Sequence[PlayerId], process: Sequence[PlayerId], matrix: WinMatrix,
                   rng: random.Random):
    """Merge two strict rankings of the same players into one.

    Returns ``(ranking, tiebreak_records)``; the tiebreakers are the
    uncounted matches played when two new players compete for the next
    place.
    """
    if sorted(draw) != sorted(process):
        raise ValueError("rankings must cover the same player set")
    sampler = MatchSampler(matrix, rng)
    log = MatchLog()
    final = _merge_walk(sampler, log, draw, process)
    return tuple(final), tuple(log.records)


def run_multistage(matrix: WinMatrix, groups: int, rng: random.Random, *,
                   n: int | None = None, constrained_draw: bool = True,
                   seeding: Seeding = Seeding.RANDOM) -> TournamentResult:
    if groups not in (4, 8):
        raise ValueError("multi-stage supports 4 or 8 groups")
    kind = FormatKind.MULTISTAGE_4 if groups == 4 else FormatKind.MULTISTAGE_8
    spec = FormatSpec(kind, n if n is not None else matrix.n,
                      constrained_draw=constrained_draw, seeding=seeding)
    return run_format(spec, matrix, rng)


def run_double_group(matrix: WinMatrix, rng: random.Random, *,
                     constrained_draw: bool = True,
                     seeding: Seeding = Seeding.RANDOM) -> TournamentResult:
    spec = FormatSpec(FormatKind.DOUBLE_GROUP, matrix.n,
                      constrained_draw=constrained_draw, seeding=seeding)
    return run_format(spec, matrix, rng)
