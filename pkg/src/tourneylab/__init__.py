"""Tournament-design simulation laboratory.

Simulates nine tournament formats over configurable winning-probability
models and measures how faithfully each format reproduces the true
strength order of the players.
"""

from .engine import (
    DominanceEstimate,
    MetricSummary,
    ModelSpec,
    RunConfig,
    RunSummary,
    dominance,
    replication_rng,
    run,
    sweep,
)
from .formats import (
    FormatKind,
    FormatSpec,
    Seeding,
    merge_rankings,
    run_double_group,
    run_draw_and_process,
    run_format,
    run_multistage,
    run_placement_knockout,
    run_round_robin,
    run_triple_knockout,
    seeded_bracket,
)
from .metrics import MetricVector, avg_rank_top, inversions, metric_vector, weighted_inversions
from .model import MatchRecord, ObservedRanking, PlayerId, TournamentResult, validate_result
from .oracle import OutcomeEnumeration, enumerate_outcomes, expected_metric, metric_moments
from .prob import (
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
from .swiss import SwissState, UnpairableRoundError, buchholz, pair_round, run_swiss

__version__ = "0.1.0"

__all__ = [
    "DominanceEstimate",
    "FormatKind",
    "FormatSpec",
    "MatchRecord",
    "MetricSummary",
    "MetricVector",
    "ModelSpec",
    "ObservedRanking",
    "OutcomeEnumeration",
    "PlayerId",
    "RatingTable",
    "RunConfig",
    "RunSummary",
    "Seeding",
    "SkillModel",
    "SwissState",
    "TournamentResult",
    "UnpairableRoundError",
    "WinMatrix",
    "avg_rank_top",
    "buchholz",
    "deterministic_matrix",
    "dominance",
    "elo_matrix",
    "enumerate_outcomes",
    "expected_metric",
    "inversions",
    "load_matrix_csv",
    "load_rating_csv",
    "merge_rankings",
    "metric_moments",
    "metric_vector",
    "pair_round",
    "replication_rng",
    "run",
    "run_double_group",
    "run_draw_and_process",
    "run_format",
    "run_multistage",
    "run_placement_knockout",
    "run_round_robin",
    "run_swiss",
    "run_triple_knockout",
    "sample_match",
    "seeded_bracket",
    "skill_matrix",
    "sweep",
    "uniform_matrix",
    "validate_result",
    "weighted_inversions",
]
