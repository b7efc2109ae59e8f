from tourneylab.model import MatchRecord, TournamentResult, is_permutation, validate_result

import pytest


def result(ranking, matches):
    return TournamentResult.from_log(ranking, matches)


def rec(stage, white, black, winner, counted=True):
    return MatchRecord(stage, white, black, winner, counted)


def test_identity_permutation_validates():
    r = result((1, 2, 3, 4), [rec("rr", 1, 2, 1), rec("rr", 3, 4, 3)])
    assert validate_result(r, 4)


def test_duplicate_id_rejected():
    r = TournamentResult((1, 1, 3, 4), (), 0)
    assert not validate_result(r, 4)


def test_count_mismatch_rejected():
    matches = tuple(rec("rr", 1, 2, 1) for _ in range(4))
    r = TournamentResult((1, 2, 3, 4), matches, 5)
    assert not validate_result(r, 4)


def test_winner_must_play_in_match():
    r = TournamentResult((1, 2), (rec("rr", 1, 2, 3),), 1)
    assert not validate_result(r, 2)


def test_self_match_rejected():
    r = TournamentResult((1, 2), (rec("rr", 1, 1, 1),), 1)
    assert not validate_result(r, 2)


def test_from_log_counts_only_counted():
    r = result((2, 1), [rec("rr", 1, 2, 2), rec("tiebreak", 1, 2, 1, counted=False)])
    assert r.counted_matches == 1
    assert validate_result(r, 2)


def test_needs_two_players():
    with pytest.raises(ValueError):
        validate_result(TournamentResult((1,), (), 0), 1)


def test_is_permutation():
    assert is_permutation((3, 1, 2), 3)
    assert not is_permutation((1, 2), 3)
    assert not is_permutation((0, 1, 2), 3)
    assert not is_permutation((2, 2, 3), 3)
