import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tourneylab.prob import (
    MatchSampler,
    RatingFileError,
    RatingTable,
    SkillModel,
    WinMatrix,
    deterministic_matrix,
    elo_matrix,
    load_matrix_csv,
    load_rating_csv,
    sample_match,
    skill_matrix,
    uniform_matrix,
)


class TestSkillMatrix:
    def test_strongest_vs_second_at_skill_10(self):
        m = skill_matrix(SkillModel(10.0), 32)
        assert m.win_prob(1, 2) == pytest.approx(0.60)

    def test_strongest_vs_second_at_skill_1(self):
        m = skill_matrix(SkillModel(1.0), 32)
        assert m.win_prob(1, 2) == pytest.approx(0.51)

    def test_equal_ranks_are_even(self):
        for skill in (1.0, 5.0, 10.0):
            m = skill_matrix(SkillModel(skill), 8)
            assert all(m.win_prob(a, a) == 0.5 for a in range(1, 9))

    def test_saturation_at_large_gap(self):
        m = skill_matrix(SkillModel(10.0), 32)
        assert m.win_prob(1, 6) == 1.0
        # the whole clamp region: certain wins against ranks 6..32
        assert all(m.win_prob(1, b) == 1.0 for b in range(6, 33))
        assert m.win_prob(1, 5) == pytest.approx(0.9)

    @pytest.mark.parametrize("skill", [1.0, 5.0, 10.0])
    def test_invariants_at_paper_size(self, skill):
        m = skill_matrix(SkillModel(skill), 32)
        assert m.check_complement()
        assert m.check_monotone()

    def test_rejects_bad_sizes(self):
        with pytest.raises(ValueError):
            skill_matrix(SkillModel(5.0), 1)
        with pytest.raises(ValueError):
            SkillModel(0.0)


class TestEloMatrix:
    def test_equal_ratings(self):
        m, names = elo_matrix(RatingTable((("a", 1500.0), ("b", 1500.0))))
        assert m.win_prob(1, 2) == pytest.approx(0.5)
        assert names == ("a", "b")

    def test_400_point_gap(self):
        m, names = elo_matrix(RatingTable((("weak", 1100.0), ("strong", 1500.0))))
        assert names == ("strong", "weak")
        assert m.win_prob(1, 2) == pytest.approx(10 / 11)
        assert m.win_prob(2, 1) == pytest.approx(1 / 11)

    def test_rejects_duplicates_and_tiny_tables(self):
        with pytest.raises(ValueError):
            RatingTable((("a", 1.0), ("a", 2.0)))
        with pytest.raises(ValueError):
            RatingTable((("a", 1.0),))

    @given(st.lists(st.floats(min_value=-3000, max_value=3000), min_size=2, max_size=12))
    @settings(max_examples=50)
    def test_invariants_for_any_table(self, ratings):
        table = RatingTable(tuple((f"p{i}", r) for i, r in enumerate(ratings)))
        m, _ = elo_matrix(table)
        assert m.check_complement()
        assert m.check_monotone()


class TestSampleMatch:
    def test_degenerate_probabilities(self):
        m = deterministic_matrix(4)
        rng = random.Random(1)
        assert all(sample_match(m, 1, 4, rng) == 1 for _ in range(50))
        assert all(sample_match(m, 4, 1, rng) == 1 for _ in range(50))

    def test_law_of_large_numbers(self):
        p = np.full((2, 2), 0.5)
        p[0, 1], p[1, 0] = 0.6, 0.4
        m = WinMatrix(2, p)
        rng = random.Random(42)
        hits = sum(sample_match(m, 1, 2, rng) == 1 for _ in range(1_000_000))
        assert hits / 1_000_000 == pytest.approx(0.6, abs=0.002)

    def test_replaying_stream_replays_winner(self):
        m = skill_matrix(SkillModel(5.0), 8)
        a = [sample_match(m, 2, 7, random.Random(s)) for s in range(40)]
        b = [sample_match(m, 2, 7, random.Random(s)) for s in range(40)]
        assert a == b

    def test_self_play_rejected(self):
        with pytest.raises(ValueError):
            sample_match(uniform_matrix(4), 2, 2, random.Random(0))


class TestMatchSampler:
    def test_win_many_matches_win_sequence(self):
        m = skill_matrix(SkillModel(5.0), 8)
        pairs = [(1, 2), (3, 4), (5, 6), (7, 8)]
        one = MatchSampler(m, random.Random(3))
        two = MatchSampler(m, random.Random(3))
        assert one.win_many(pairs) == [two.win(a, b) for a, b in pairs]

    def test_order_is_permutation(self):
        s = MatchSampler(uniform_matrix(8), random.Random(5))
        out = s.order(range(1, 9))
        assert sorted(out) == list(range(1, 9))


class TestRatingFile(object):
    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("name,rating\nalice,1500\nbob,1400.5\n", encoding="utf-8")
        table = load_rating_csv(str(path))
        assert table.entries == (("alice", 1500.0), ("bob", 1400.5))

    def test_malformed_row_reports_line(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("name,rating\nalice,1500\nbob,notanumber\n", encoding="utf-8")
        with pytest.raises(RatingFileError, match=":3:"):
            load_rating_csv(str(path))

    def test_bad_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("player,elo\nalice,1500\n", encoding="utf-8")
        with pytest.raises(RatingFileError, match=":1:"):
            load_rating_csv(str(path))

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("name,rating\nalice,1500,extra\n", encoding="utf-8")
        with pytest.raises(RatingFileError, match=":2:"):
            load_rating_csv(str(path))


class TestMatrixFile:
    def test_round_trip(self, tmp_path):
        m = skill_matrix(SkillModel(5.0), 4)
        path = tmp_path / "m.csv"
        path.write_text("\n".join(",".join(repr(x) for x in row) for row in m.p.tolist()), encoding="utf-8")
        loaded = load_matrix_csv(str(path))
        assert np.allclose(loaded.p, m.p)

    def test_rejects_complement_violation(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("0.5,0.7\n0.4,0.5\n", encoding="utf-8")
        with pytest.raises(RatingFileError, match="p_ij"):
            load_matrix_csv(str(path))

    def test_rejects_non_monotone(self, tmp_path):
        path = tmp_path / "m.csv"
        # p[1][3] < p[1][2]: strength monotonicity broken
        path.write_text("0.5,0.9,0.6\n0.1,0.5,0.6\n0.4,0.4,0.5\n", encoding="utf-8")
        with pytest.raises(RatingFileError, match="monotonicity"):
            load_matrix_csv(str(path))

    def test_rejects_out_of_range(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("0.5,1.2\n-0.2,0.5\n", encoding="utf-8")
        with pytest.raises(RatingFileError):
            load_matrix_csv(str(path))
