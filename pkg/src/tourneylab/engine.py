"""Monte Carlo orchestration.

Runs independent replications of a tournament format, aggregates metric
means, standard errors and full histograms, and compares formats via
dominance probabilities. Every replication gets its own random stream
derived only from (master_seed, replication index), so results are
identical regardless of how the work is chunked across processes.
"""

from __future__ import annotations

import bisect
import math
import multiprocessing
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .formats import FormatSpec, _run_format
from .metrics import MetricComputer
from .model import CountingLog
from .prob import MatchSampler, WinMatrix

REAL_BIN_WIDTH = 0.25


@dataclass(frozen=True)
class ModelSpec:
    """A winning-probability model with a human-readable label."""

    label: str
    matrix: WinMatrix


ALL_METRICS = ("inversions", "weighted_inversions", "avg_rank_top")


@dataclass(frozen=True)
class RunConfig:
    format: FormatSpec
    model: ModelSpec
    replications: int
    master_seed: int = 1
    top_k: tuple[int, ...] = (1, 8)
    log_base: float | None = None
    metrics: tuple[str, ...] = ALL_METRICS

    def __post_init__(self) -> None:
        if self.replications < 1:
            raise ValueError("need at least 1 replication")
        if self.model.matrix.n != self.format.n:
            raise ValueError(
                f"model has {self.model.matrix.n} players but the format needs {self.format.n}"
            )
        for k in self.top_k:
            if not 1 <= k <= self.format.n:
                raise ValueError(f"top-k value {k} outside 1..{self.format.n}")
        for name in self.metrics:
            if name not in ALL_METRICS:
                raise ValueError(f"unknown metric {name!r}")

    @property
    def metric_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for name in self.metrics:
            if name == "avg_rank_top":
                names.extend(f"avg_rank_top_{k}" for k in self.top_k)
            else:
                names.append(name)
        return tuple(names)


@dataclass(frozen=True)
class MetricSummary:
    mean: float
    stderr: float
    minimum: float
    maximum: float
    histogram: dict[float, int]
    bin_width: float | None  # None: exact integer values


@dataclass(frozen=True)
class RunSummary:
    format_label: str
    param: str
    model_label: str
    counted_matches: int
    replications: int
    metrics: dict[str, MetricSummary]


@dataclass(frozen=True)
class DominanceEstimate:
    p_strictly_less: float
    p_tie: float
    samples: tuple[int, int]

    def __post_init__(self) -> None:
        if self.p_strictly_less + self.p_tie > 1.0 + 1e-12:
            raise AssertionError("probabilities exceed 1")


def replication_rng(master_seed: int, index: int) -> random.Random:
    """Independent stream for one replication.

    Streams are seeded with the injective mix ``master_seed * 2**64 +
    index``, so every (seed, index) pair maps to a distinct stream and
    parallel execution cannot change any outcome.
    """
    return random.Random((master_seed << 64) | index)


def _run_chunk(config: RunConfig, start: int, stop: int) -> tuple[int, dict[str, np.ndarray]]:
    spec = config.format
    matrix = config.model.matrix
    top_k = config.top_k if "avg_rank_top" in config.metrics else ()
    count = stop - start
    arrays = {name: np.empty(count) for name in config.metric_names}
    computer = MetricComputer(spec.n, top_k, config.log_base)
    top_arrays = [(k, arrays[f"avg_rank_top_{k}"]) for k in top_k]
    inv_arr = arrays.get("inversions")
    winv_arr = arrays.get("weighted_inversions")
    counted = -1
    master_seed = config.master_seed
    for i in range(count):
        rng = replication_rng(master_seed, start + i)
        sampler = MatchSampler(matrix, rng)
        log = CountingLog()
        ranking = _run_format(spec, sampler, log)
        if counted < 0:
            counted = log.counted
        elif log.counted != counted:
            raise AssertionError(
                f"{spec.label}: counted matches changed between replications "
                f"({counted} vs {log.counted})"
            )
        if arrays:
            mv = computer.vector(ranking)
            if inv_arr is not None:
                inv_arr[i] = mv.inversions
            if winv_arr is not None:
                winv_arr[i] = mv.weighted_inversions
            for k, arr in top_arrays:
                arr[i] = mv.avg_rank_top[k]
    return counted, arrays


def _run_chunk_star(args) -> tuple[int, dict[str, np.ndarray]]:
    return _run_chunk(*args)


def _summarize(name: str, values: np.ndarray) -> MetricSummary:
    n = len(values)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    if name == "inversions":
        ints = values.astype(np.int64)
        uniq, counts = np.unique(ints, return_counts=True)
        hist = {int(v): int(c) for v, c in zip(uniq, counts)}
        width = None
    else:
        bins = np.floor(values / REAL_BIN_WIDTH).astype(np.int64)
        uniq, counts = np.unique(bins, return_counts=True)
        hist = {round(float(v) * REAL_BIN_WIDTH, 10): int(c) for v, c in zip(uniq, counts)}
        width = REAL_BIN_WIDTH
    return MetricSummary(mean, stderr, float(values.min()), float(values.max()), hist, width)


def run(config: RunConfig, workers: int = 1) -> RunSummary:
    """Execute all replications and aggregate.

    With ``workers > 1`` the replication range is split across
    processes; chunk results are reassembled in index order, so the
    output is identical to a sequential run.
    """
    reps = config.replications
    if workers <= 1 or reps < 4:
        chunks = [_run_chunk(config, 0, reps)]
    else:
        bounds = np.linspace(0, reps, workers + 1).astype(int)
        tasks = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if a < b]
        with multiprocessing.Pool(workers) as pool:
            chunks = pool.map(_run_chunk_star, tasks)
    counted = chunks[0][0]
    if any(c != counted for c, _ in chunks):
        raise AssertionError("counted matches differ across chunks")
    metrics = {}
    for name in config.metric_names:
        values = np.concatenate([arrays[name] for _, arrays in chunks])
        metrics[name] = _summarize(name, values)
    return RunSummary(
        format_label=config.format.label,
        param=config.format.param,
        model_label=config.model.label,
        counted_matches=counted,
        replications=reps,
        metrics=metrics,
    )


def dominance(a: RunSummary, b: RunSummary, metric: str) -> DominanceEstimate:
    """P(sample from a < sample from b), treating the runs as independent.

    Computed exactly from the two histograms (the all-pairs statistic);
    ties are reported separately, never split.
    """
    for summary in (a, b):
        if metric not in summary.metrics:
            raise KeyError(f"run has no histogram for metric {metric!r}")
    ha = a.metrics[metric].histogram
    hb = b.metrics[metric].histogram
    na = sum(ha.values())
    nb = sum(hb.values())
    b_vals = sorted(hb)
    b_counts = [hb[v] for v in b_vals]
    suffix = [0] * (len(b_vals) + 1)
    for i in range(len(b_vals) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + b_counts[i]
    less = 0.0
    tie = 0.0
    for va, ca in ha.items():
        pos = bisect.bisect_right(b_vals, va)
        less += ca * suffix[pos]
        idx = bisect.bisect_left(b_vals, va)
        if idx < len(b_vals) and b_vals[idx] == va:
            tie += ca * b_counts[idx]
    total = na * nb
    return DominanceEstimate(less / total, tie / total, (na, nb))


def sweep(configs: Sequence[RunConfig], workers: int = 1) -> list[RunSummary]:
    """Run several configurations; one summary row per configuration."""
    if not configs:
        raise ValueError("sweep needs at least one configuration")
    return [run(cfg, workers=workers) for cfg in configs]


# -- histogram shape diagnostics ----------------------------------------


def histogram_skewness(hist: dict[float, int]) -> float:
    """Sample skewness g1 computed exactly from a histogram."""
    values = np.array(sorted(hist), dtype=float)
    counts = np.array([hist[v] for v in sorted(hist)], dtype=float)
    n = counts.sum()
    mean = (values * counts).sum() / n
    dev = values - mean
    m2 = (counts * dev**2).sum() / n
    m3 = (counts * dev**3).sum() / n
    return float(m3 / m2**1.5) if m2 > 0 else 0.0


def histogram_is_unimodal(hist: dict[int, int], window: int = 9, floor_frac: float = 0.01) -> bool:
    """True when the smoothed histogram has a single peak.

    Counts are smoothed with a centred moving average and peaks are
    counted only where the smoothed curve exceeds ``floor_frac`` of its
    maximum, so sparse single-count wiggles in the far tails do not
    register as modes.
    """
    lo = min(hist)
    hi = max(hist)
    dense = np.zeros(hi - lo + 1)
    for v, c in hist.items():
        dense[int(v) - lo] = c
    kernel = np.ones(window) / window
    smooth = np.convolve(dense, kernel, mode="same")
    floor = floor_frac * smooth.max()
    peaks = 0
    rising = True
    prev = 0.0
    for x in smooth:
        if x > prev:
            rising = True
        elif x < prev:
            if rising and prev > floor:
                peaks += 1
            rising = False
        prev = x
    if rising and prev > floor:
        peaks += 1
    return peaks == 1
