import random

import pytest

from tourneylab.engine import (
    DominanceEstimate,
    MetricSummary,
    ModelSpec,
    RunConfig,
    RunSummary,
    dominance,
    histogram_is_unimodal,
    histogram_skewness,
    replication_rng,
    run,
    sweep,
)
from tourneylab.formats import FormatKind, FormatSpec, Seeding
from tourneylab.prob import SkillModel, deterministic_matrix, skill_matrix


def model(skill=5.0, n=32):
    return ModelSpec(f"skill:{skill}", skill_matrix(SkillModel(skill), n))


def ko_config(reps=500, seed=1, n=32, **kw):
    return RunConfig(FormatSpec(FormatKind.KNOCKOUT, n), model(n=n), reps, seed, **kw)


class TestReplicationStreams:
    def test_streams_are_deterministic(self):
        a = [replication_rng(7, i).random() for i in range(20)]
        b = [replication_rng(7, i).random() for i in range(20)]
        assert a == b

    def test_streams_differ_across_indices_and_seeds(self):
        values = {round(replication_rng(s, i).random(), 12) for s in range(5) for i in range(50)}
        assert len(values) == 250


class TestRun:
    def test_identical_configs_identical_summaries(self):
        one = run(ko_config())
        two = run(ko_config())
        assert one == two

    def test_different_seeds_differ(self):
        assert run(ko_config(seed=1)) != run(ko_config(seed=2))

    def test_parallel_equals_sequential(self):
        seq = run(ko_config(reps=600), workers=1)
        par = run(ko_config(reps=600), workers=3)
        assert seq == par  # bit-identical, including means and histograms

    def test_histogram_counts_sum_to_replications(self):
        summary = run(ko_config(reps=800))
        for ms in summary.metrics.values():
            assert sum(ms.histogram.values()) == 800
            assert ms.minimum <= ms.mean <= ms.maximum

    def test_counted_matches_constant_across_replications(self):
        summary = run(ko_config(reps=400))
        assert summary.counted_matches == 80

    def test_deterministic_matrix_all_replications_perfect(self):
        cfg = RunConfig(
            FormatSpec(FormatKind.KNOCKOUT, 32, seeding=Seeding.DETERMINISTIC),
            ModelSpec("det", deterministic_matrix(32)),
            100,
            3,
        )
        summary = run(cfg)
        assert summary.metrics["inversions"].histogram == {0: 100}
        assert summary.metrics["weighted_inversions"].mean == 0.0
        assert summary.metrics["avg_rank_top_1"].mean == 1.0
        assert summary.metrics["avg_rank_top_8"].mean == 1.0

    def test_stderr_scales_inverse_sqrt(self):
        small = run(ko_config(reps=2000, seed=11))
        large = run(ko_config(reps=8000, seed=12))
        ratio = small.metrics["inversions"].stderr / large.metrics["inversions"].stderr
        assert ratio == pytest.approx(2.0, rel=0.30)

    def test_top_k_and_log_base_flow_through(self):
        cfg = ko_config(reps=50, top_k=(1, 4), log_base=2.0)
        summary = run(cfg)
        assert set(summary.metrics) == {"inversions", "weighted_inversions", "avg_rank_top_1", "avg_rank_top_4"}

    def test_empty_metric_set_counts_only(self):
        summary = run(ko_config(reps=40, metrics=()))
        assert summary.metrics == {}
        assert summary.counted_matches == 80
        with pytest.raises(ValueError):
            ko_config(metrics=("nope",))

    def test_validates_config(self):
        with pytest.raises(ValueError):
            ko_config(reps=0)
        with pytest.raises(ValueError):
            ko_config(top_k=(40,))
        with pytest.raises(ValueError):
            RunConfig(FormatSpec(FormatKind.KNOCKOUT, 16), model(n=32), 10, 1)


class TestDominance:
    def summary_with_hist(self, hist):
        reps = sum(hist.values())
        ms = MetricSummary(0.0, 0.0, min(hist), max(hist), hist, None)
        return RunSummary("x", "", "m", 0, reps, {"inversions": ms})

    def test_identical_point_masses_tie(self):
        a = self.summary_with_hist({3: 100})
        b = self.summary_with_hist({3: 100})
        est = dominance(a, b, "inversions")
        assert est.p_strictly_less == 0.0
        assert est.p_tie == 1.0

    def test_strict_dominance(self):
        a = self.summary_with_hist({3: 50})
        b = self.summary_with_hist({5: 70})
        est = dominance(a, b, "inversions")
        assert est.p_strictly_less == 1.0
        assert est.p_tie == 0.0

    def test_all_pairs_statistic(self):
        a = self.summary_with_hist({1: 1, 3: 1})
        b = self.summary_with_hist({2: 1, 3: 1})
        est = dominance(a, b, "inversions")
        # pairs: (1,2)<, (1,3)<, (3,2)>, (3,3)=
        assert est.p_strictly_less == pytest.approx(0.5)
        assert est.p_tie == pytest.approx(0.25)
        assert est.samples == (2, 2)

    def test_missing_metric(self):
        a = self.summary_with_hist({1: 1})
        with pytest.raises(KeyError):
            dominance(a, a, "nope")

    def test_estimate_validates(self):
        with pytest.raises(AssertionError):
            DominanceEstimate(0.9, 0.2, (1, 1))


class TestSweep:
    def test_swiss_sweep_counted_column(self):
        configs = [
            RunConfig(FormatSpec(FormatKind.SWISS, 32, swiss_rounds=r), model(), 20, 1)
            for r in range(5, 15)
        ]
        rows = sweep(configs)
        assert [r.counted_matches for r in rows] == [16 * r for r in range(5, 15)]
        assert [r.param for r in rows] == [str(r) for r in range(5, 15)]

    def test_empty_sweep_rejected(self):
        with pytest.raises(ValueError):
            sweep([])


class TestHistogramDiagnostics:
    def test_skewness_of_symmetric_histogram(self):
        hist = {0: 1, 1: 4, 2: 6, 3: 4, 4: 1}  # binomial(4, 1/2)
        assert histogram_skewness(hist) == pytest.approx(0.0, abs=1e-12)

    def test_skewness_sign(self):
        assert histogram_skewness({0: 50, 1: 30, 2: 15, 10: 5}) > 0
        assert histogram_skewness({0: 5, 8: 15, 9: 30, 10: 50}) < 0

    def test_unimodal_accepts_noisy_bell(self):
        rng = random.Random(1)
        hist = {}
        for _ in range(20000):
            v = round(sum(rng.random() for _ in range(12)) * 8)
            hist[v] = hist.get(v, 0) + 1
        assert histogram_is_unimodal(hist)

    def test_bimodal_rejected(self):
        hist = {i: 100 - abs(20 - i) * 4 for i in range(10, 31)}
        hist.update({i + 60: 100 - abs(20 - i) * 4 for i in range(10, 31)})
        assert not histogram_is_unimodal(hist)
