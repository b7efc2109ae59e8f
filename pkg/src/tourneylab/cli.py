"""Command-line front end.

Subcommands:

* ``simulate`` - run one format under one model, emit metric summaries
  and histograms.
* ``sweep`` - run several formats (or a range of Swiss rounds) and emit
  one row per configuration.
* ``compare`` - estimate the probability that one format produces a
  strictly smaller metric value than another.
* ``verify`` - run the built-in consistency battery (match budgets,
  exact small-instance expectations, bracket separation, deterministic
  fixed points); exits 3 on any failure.

Exit codes: 0 success, 1 usage error, 2 runtime or model error,
3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import engine, oracle
from .formats import FormatKind, FormatSpec, Seeding, bit_reverse, bracket_meeting_round, run_format
from .metrics import inversions
from .model import is_permutation
from .prob import (
    RatingFileError,
    SkillModel,
    deterministic_matrix,
    elo_matrix,
    load_matrix_csv,
    load_rating_csv,
    skill_matrix,
    uniform_matrix,
)
from .swiss import run_swiss

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2
EXIT_VERIFY = 3

FORMAT_CHOICES = [k.value for k in FormatKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would exit(2)
        raise UsageError(message)


@dataclass(frozen=True)
class CliConfig:
    """Validated command-line configuration."""

    subcommand: str
    formats: tuple[FormatSpec, ...]
    model: engine.ModelSpec
    raw_flags: dict = field(hash=False)
    players: int = 32
    reps: int = 100_000
    seed: int = 1
    top_k: tuple[int, ...] = (1, 8)
    log_base: float | None = None
    out: str | None = None
    out_format: str = "csv"
    metric: str = "inversions"
    workers: int = 1


def _parse_rounds_list(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            a, b = int(lo), int(hi)
        except ValueError:
            raise UsageError(f"--rounds: invalid range {text!r}") from None
        if a > b:
            raise UsageError(f"--rounds: empty range {text!r}")
        return list(range(a, b + 1))
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"--rounds: invalid value {text!r}") from None


def _parse_topk(text: str, players: int) -> tuple[int, ...]:
    try:
        ks = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"--topk: invalid list {text!r}") from None
    for k in ks:
        if not 1 <= k <= players:
            raise UsageError(f"--topk: {k} outside 1..{players}")
    return ks


def _parse_log_base(text: str) -> float | None:
    if text == "e":
        return None
    try:
        base = float(text)
    except ValueError:
        raise UsageError(f"--log-base: invalid value {text!r}") from None
    if not base > 1:
        raise UsageError("--log-base must exceed 1")
    return base


def _build_model(text: str, players: int) -> engine.ModelSpec:
    kind, sep, arg = text.partition(":")
    if not sep:
        raise UsageError(f"--model: expected skill:FLOAT, elo:PATH or matrix:PATH, got {text!r}")
    if kind == "skill":
        try:
            skill = float(arg)
        except ValueError:
            raise UsageError(f"--model: invalid skill value {arg!r}") from None
        if skill <= 0:
            raise UsageError("--model: skill must be positive")
        return engine.ModelSpec(text, skill_matrix(SkillModel(skill), players))
    if kind == "elo":
        matrix, _names = elo_matrix(load_rating_csv(arg))
        return engine.ModelSpec(text, matrix)
    if kind == "matrix":
        return engine.ModelSpec(text, load_matrix_csv(arg))
    raise UsageError(f"--model: unknown model kind {kind!r}")


def _make_spec(fmt: str, players: int, rounds: int | None) -> FormatSpec:
    if fmt not in FORMAT_CHOICES:
        raise UsageError(f"--format: unknown format {fmt!r}")
    kind = FormatKind(fmt)
    if kind is FormatKind.SWISS:
        if rounds is None:
            raise UsageError("--format swiss requires --rounds")
        try:
            return FormatSpec(kind, players, swiss_rounds=rounds)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    if rounds is not None:
        raise UsageError("--rounds is only valid with --format swiss")
    try:
        return FormatSpec(kind, players)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--players", type=int, default=32)
    parser.add_argument("--model", default="skill:5")
    parser.add_argument("--reps", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--topk", default="1,8")
    parser.add_argument("--log-base", default="e")
    parser.add_argument("--out", default=None)
    parser.add_argument("--out-format", choices=["csv", "json"], default="csv")
    parser.add_argument("--workers", type=int, default=1)


def build_parser() -> _Parser:
    parser = _Parser(prog="tourneylab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="run one format under one model")
    p_sim.add_argument("--format", required=True)
    p_sim.add_argument("--rounds", default=None)
    _add_common(p_sim)

    p_sweep = sub.add_parser("sweep", help="run several configurations")
    p_sweep.add_argument("--format", required=True, help="comma-separated format list")
    p_sweep.add_argument("--rounds", default=None, help="swiss rounds, e.g. 5..14")
    _add_common(p_sweep)

    p_cmp = sub.add_parser("compare", help="dominance probability between two formats")
    p_cmp.add_argument("--format-a", required=True)
    p_cmp.add_argument("--format-b", required=True)
    p_cmp.add_argument("--rounds-a", type=int, default=None)
    p_cmp.add_argument("--rounds-b", type=int, default=None)
    p_cmp.add_argument("--metric", default="inversions")
    _add_common(p_cmp)

    p_ver = sub.add_parser("verify", help="run the built-in consistency battery")
    p_ver.add_argument("--reps", type=int, default=20_000)
    p_ver.add_argument("--seed", type=int, default=1)
    p_ver.add_argument("--workers", type=int, default=1)
    return parser


def parse_args(argv: Sequence[str]) -> CliConfig:
    ns = build_parser().parse_args(argv)
    raw = dict(vars(ns))
    if ns.subcommand == "verify":
        return CliConfig(
            subcommand="verify",
            formats=(),
            model=engine.ModelSpec("skill:5", skill_matrix(SkillModel(5.0), 32)),
            raw_flags=raw,
            reps=ns.reps,
            seed=ns.seed,
            workers=ns.workers,
        )
    players = ns.players
    if players < 2:
        raise UsageError("--players must be at least 2")
    if not 0 <= ns.seed < 2**64:
        raise UsageError("--seed must fit in 64 bits")
    if ns.reps < 1:
        raise UsageError("--reps must be positive")
    top_k = _parse_topk(ns.topk, players)
    log_base = _parse_log_base(ns.log_base)
    model = _build_model(ns.model, players)

    if ns.subcommand == "simulate":
        if ns.rounds is None:
            rounds = None
        else:
            try:
                rounds = int(ns.rounds)
            except ValueError:
                raise UsageError(f"--rounds: invalid value {ns.rounds!r}") from None
        formats = (_make_spec(ns.format, players, rounds),)
    elif ns.subcommand == "sweep":
        formats = []
        for fmt in ns.format.split(","):
            fmt = fmt.strip()
            if fmt == "swiss":
                if ns.rounds is None:
                    raise UsageError("--format swiss requires --rounds")
                for r in _parse_rounds_list(ns.rounds):
                    formats.append(_make_spec("swiss", players, r))
            else:
                formats.append(_make_spec(fmt, players, None))
        formats = tuple(formats)
    else:  # compare
        formats = (
            _make_spec(ns.format_a, players, ns.rounds_a),
            _make_spec(ns.format_b, players, ns.rounds_b),
        )

    return CliConfig(
        subcommand=ns.subcommand,
        formats=formats,
        model=model,
        raw_flags=raw,
        players=players,
        reps=ns.reps,
        seed=ns.seed,
        top_k=top_k,
        log_base=log_base,
        out=ns.out,
        out_format=ns.out_format,
        metric=getattr(ns, "metric", "inversions"),
        workers=ns.workers,
    )


# -- output ---------------------------------------------------------------


def _hist_rows(summary: engine.RunSummary) -> list[tuple[str, float, int]]:
    rows = []
    for name, ms in summary.metrics.items():
        for value in sorted(ms.histogram):
            rows.append((name, value, ms.histogram[value]))
    return rows


def _summary_json(summary: engine.RunSummary) -> dict:
    return {
        "format": summary.format_label,
        "param": summary.param,
        "model": summary.model_label,
        "counted_matches": summary.counted_matches,
        "replications": summary.replications,
        "metrics": {
            name: {
                "mean": ms.mean,
                "stderr": ms.stderr,
                "min": ms.minimum,
                "max": ms.maximum,
            }
            for name, ms in summary.metrics.items()
        },
    }


def _histogram_json(summary: engine.RunSummary) -> dict:
    return {
        name: [[value, ms.histogram[value]] for value in sorted(ms.histogram)]
        for name, ms in summary.metrics.items()
    }


def emit_summaries(config: CliConfig, summaries: Sequence[engine.RunSummary]) -> None:
    """Write sweep/simulate output as CSV (plus histogram file) or JSON."""
    for s in summaries:
        print(f"{s.format_label:>10s} model={s.model_label} matches={s.counted_matches} reps={s.replications}")
        for name, ms in s.metrics.items():
            print(f"  {name:<22s} mean={ms.mean:.6g} stderr={ms.stderr:.3g} min={ms.minimum:.6g} max={ms.maximum:.6g}")
    if config.out is None:
        return
    out = Path(config.out)
    if config.out_format == "json":
        payload = {
            "config": config.raw_flags,
            "results": [_summary_json(s) for s in summaries],
            "histograms": [_histogram_json(s) for s in summaries],
        }
        out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["format", "param", "counted_matches", "metric", "mean", "stderr"])
        for s in summaries:
            for name, ms in s.metrics.items():
                writer.writerow([s.format_label, s.param, s.counted_matches, name,
                                 repr(ms.mean), repr(ms.stderr)])
    hist_path = out.with_suffix(".hist.csv")
    with hist_path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value", "count"])
        for s in summaries:
            for name, value, count in _hist_rows(s):
                writer.writerow([name, repr(value) if isinstance(value, float) else value, count])


def emit_dominance(config: CliConfig, est: engine.DominanceEstimate,
                   runs: tuple[engine.RunSummary, engine.RunSummary]) -> None:
    a, b = runs
    print(f"P({a.format_label} {config.metric} < {b.format_label} {config.metric}) "
          f"= {est.p_strictly_less:.4f} (ties {est.p_tie:.4f})")
    if config.out is None:
        return
    out = Path(config.out)
    if config.out_format == "json":
        payload = {
            "config": config.raw_flags,
            "results": {
                "metric": config.metric,
                "p_strictly_less": est.p_strictly_less,
                "p_tie": est.p_tie,
                "samples": list(est.samples),
                "a": _summary_json(a),
                "b": _summary_json(b),
            },
            "histograms": {"a": _histogram_json(a), "b": _histogram_json(b)},
        }
        out.write_text(json.dumps(payload, indent=2), encoding="utf-8")
        return
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "p_strictly_less", "p_tie", "samples_a", "samples_b"])
        writer.writerow([config.metric, repr(est.p_strictly_less), repr(est.p_tie),
                         est.samples[0], est.samples[1]])


# -- verify battery -------------------------------------------------------


def _verify_checks(reps: int, seed: int, workers: int) -> list[tuple[str, bool, str]]:
    checks: list[tuple[str, bool, str]] = []
    matrix32 = skill_matrix(SkillModel(5.0), 32)
    model32 = engine.ModelSpec("skill:5", matrix32)

    # Match budgets stay constant over replications for every format.
    budget_reps = max(200, min(reps // 10, 2000))
    specs = [FormatSpec(k, 32) for k in FormatKind if k not in (FormatKind.SWISS,)]
    specs.append(FormatSpec(FormatKind.SWISS, 32, swiss_rounds=5))
    for spec in specs:
        summary = engine.run(engine.RunConfig(spec, model32, budget_reps, seed), workers=workers)
        ok = summary.counted_matches == spec.counted_matches
        checks.append((f"match-budget {spec.label}", ok,
                       f"counted {summary.counted_matches}, expected {spec.counted_matches}"))

    # A deterministic matrix plus deterministic seeding yields the identity.
    # Swiss needs the full n-1 rounds: with fewer, equal-on-wins players
    # can be misordered by Buchholz even without upsets.
    det = deterministic_matrix(32)
    for spec in specs:
        rounds = 31 if spec.kind is FormatKind.SWISS else None
        det_spec = FormatSpec(spec.kind, 32, swiss_rounds=rounds, seeding=Seeding.DETERMINISTIC)
        result = run_format(det_spec, det, random.Random(0))
        ok = result.ranking == tuple(range(1, 33)) and inversions(result.ranking) == 0
        checks.append((f"identity-fixed-point {det_spec.label}", ok, f"ranking head {result.ranking[:6]}"))

    # Monte Carlo means match exact enumeration on small instances.
    mc_reps = max(reps, 1000)
    oracle_cases = [
        (FormatSpec(FormatKind.KNOCKOUT, 4), uniform_matrix(4)),
        (FormatSpec(FormatKind.KNOCKOUT, 4), skill_matrix(SkillModel(5.0), 4)),
        (FormatSpec(FormatKind.ROUND_ROBIN, 4), uniform_matrix(4)),
        (FormatSpec(FormatKind.KNOCKOUT, 8), skill_matrix(SkillModel(5.0), 8)),
    ]
    for spec, matrix in oracle_cases:
        enum = oracle.enumerate_outcomes(spec, matrix)
        expected, std = oracle.metric_moments(enum, "inversions")
        values = oracle.mc_metric_values(spec, matrix, "inversions", mc_reps, seed)
        bound = 3 * std / math.sqrt(mc_reps) + oracle.truncation_bound(enum, "inversions")
        diff = abs(float(values.mean()) - expected)
        checks.append((f"oracle-equivalence {spec.label} n={spec.n}", diff <= bound,
                       f"|{values.mean():.4f} - {expected:.4f}| <= {bound:.4f}"))

    # Bracket separation: first-round opponents meet again only in the final.
    bits = 5
    ok = all(
        bracket_meeting_round(bit_reverse(s, bits) + 1, bit_reverse(s ^ 1, bits) + 1) == bits
        for s in range(32)
    )
    checks.append(("draw-process-separation n=32", ok, "round-1 pairs meet in the final"))

    # Swiss never schedules a rematch.
    swiss_ok = True
    detail = "no rematches in sampled tournaments"
    for i in range(25):
        result = run_swiss(matrix32, 32, 14, random.Random(seed + i))
        seen = set()
        for rec in result.matches:
            key = frozenset((rec.white, rec.black))
            if key in seen:
                swiss_ok = False
                detail = f"rematch {tuple(key)} at seed {seed + i}"
                break
            seen.add(key)
        ranking_ok = is_permutation(result.ranking, 32)
        if not ranking_ok:
            swiss_ok = False
            detail = "ranking is not a permutation"
        if not swiss_ok:
            break
    checks.append(("swiss-no-rematch rounds=14", swiss_ok, detail))
    return checks


def run_verify(reps: int, seed: int, workers: int) -> int:
    checks = _verify_checks(reps, seed, workers)
    failed = 0
    for name, ok, detail in checks:
        print(f"[{'ok' if ok else 'FAIL'}] {name}: {detail}")
        if not ok:
            failed += 1
    print(f"{len(checks) - failed}/{len(checks)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# -- entry point ----------------------------------------------------------


def main(argv: Sequence[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        config = parse_args(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (RatingFileError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    try:
        if config.subcommand == "verify":
            return run_verify(config.reps, config.seed, config.workers)
        if config.subcommand in ("simulate", "sweep"):
            configs = [
                engine.RunConfig(spec, config.model, config.reps, config.seed,
                                 top_k=config.top_k, log_base=config.log_base)
                for spec in config.formats
            ]
            summaries = engine.sweep(configs, workers=config.workers)
            emit_summaries(config, summaries)
            return EXIT_OK
        # compare
        runs = tuple(
            engine.run(
                engine.RunConfig(spec, config.model, config.reps, config.seed + i,
                                 top_k=config.top_k, log_base=config.log_base),
                workers=config.workers,
            )
            for i, spec in enumerate(config.formats)
        )
        if config.metric not in runs[0].metrics:
            raise UsageError(f"--metric: unknown metric {config.metric!r}")
        est = engine.dominance(runs[0], runs[1], config.metric)
        emit_dominance(config, est, runs)
        return EXIT_OK
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
