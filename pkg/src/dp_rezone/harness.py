"""Experiment orchestration: current vs non-private vs private-by-replicate.

For each privacy budget, replicate r privatizes the ground-truth counts with
its own noise stream, solves on the privatized counts, and evaluates the
result on ground truth. The solver never sees ground truth in the private
pipeline, and the metrics never see the privatized counts; that split is the
whole point of the exercise.
"""
from __future__ import annotations

import datetime as _dt
import json
import multiprocessing
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .dataio import write_assignment_csv
from .district import Assignment, District
from .metrics import (
    GroupPair,
    OutcomeReport,
    bootstrap_ci,
    compile_report,
    metrics_csv_header,
    metrics_csv_row,
    rezone_frequency,
)
from .privacy import PrivacyParams, mix_seed, privatize_counts, replicate_seed, rng_from_seed
from .regression import LOCALES, RegressionResult, ols_regress, repair_rank
from .solver import SolveParams, SolveResult, solve

# Fixed labels mixed into derived seeds so the streams cannot collide.
_SEED_NONPRIVATE_SOLVE = 1
_SEED_BOOTSTRAP = 2
_SEED_PRIVATE_SOLVE = 3

RESULTS_SCHEMA = "dp-rezone/results/v1"


@dataclass(frozen=True)
class ExperimentConfig:
    epsilons: tuple[float, ...] = (2.0, 4.0)
    replicates: int = 200
    solve: SolveParams = field(default_factory=SolveParams)
    base_seed: int = 0
    objective: str = "race"  # race | ses
    locale: str = "suburban"
    workers: int = 1
    bootstrap_samples: int = 1000

    def __post_init__(self) -> None:
        if not self.epsilons:
            raise ValueError("need at least one epsilon")
        if any(e <= 0 for e in self.epsilons):
            raise ValueError("epsilons must be positive")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.objective not in ("race", "ses"):
            raise ValueError(f"unknown objective {self.objective!r}")
        if self.locale not in LOCALES:
            raise ValueError(f"unknown locale {self.locale!r}; expected one of {LOCALES}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def pair(self) -> GroupPair:
        return GroupPair.white_vs_rest() if self.objective == "race" else GroupPair.ses()

    def to_json_dict(self) -> dict:
        return {
            "epsilons": list(self.epsilons),
            "replicates": self.replicates,
            "alpha_t": self.solve.alpha_t,
            "alpha_p": self.solve.alpha_p,
            "mode": self.solve.mode,
            "restarts": self.solve.restarts,
            "max_iters": self.solve.max_iters,
            "initial_temp": self.solve.initial_temp,
            "cooling": self.solve.cooling,
            "exact_size_cap": self.solve.exact_size_cap,
            "seed": self.base_seed,
            "objective": self.objective,
            "locale": self.locale,
            "bootstrap_samples": self.bootstrap_samples,
        }

    @staticmethod
    def from_json_dict(d: dict) -> "ExperimentConfig":
        # solver knobs may arrive nested under "solver" or flat at the top level
        solver_sub = d.get("solver") or {}
        solve_keys = {}
        for k in ("alpha_t", "alpha_p", "mode", "restarts", "max_iters",
                  "initial_temp", "cooling", "exact_size_cap"):
            if k in solver_sub:
                solve_keys[k] = solver_sub[k]
            elif k in d:
                solve_keys[k] = d[k]
        return ExperimentConfig(
            epsilons=tuple(float(e) for e in d.get("epsilons", (2.0, 4.0))),
            replicates=int(d.get("replicates", 200)),
            solve=SolveParams(**solve_keys),
            base_seed=int(d.get("seed", 0)),
            objective=d.get("objective", "race"),
            locale=d.get("locale", "suburban"),
            workers=int(d.get("workers", 1)),
            bootstrap_samples=int(d.get("bootstrap_samples", 1000)),
        )


@dataclass(frozen=True)
class EpsilonSummary:
    epsilon: float
    reports: tuple[OutcomeReport, ...]
    mean_dissimilarity: float
    dissimilarity_ci: tuple[float, float]
    mean_blocks_rezoned: float
    blocks_rezoned_ci: tuple[float, float]
    mean_travel_by_group: dict[str, float]
    mean_pct_rezoned_by_group: dict[str, float]
    rezone_freq: dict[str, float]
    modal_assignment: Assignment


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    district: District
    current: OutcomeReport
    nonprivate: OutcomeReport
    nonprivate_assignment: Assignment
    nonprivate_solve: SolveResult
    per_epsilon: tuple[EpsilonSummary, ...]
    elapsed_seconds: float
    created_at: str


@dataclass(frozen=True)
class _ReplicateOutcome:
    epsilon: float
    replicate: int
    report: OutcomeReport
    school_of: dict[str, str]
    iterations: int


def _run_private_replicate(
    district: District,
    pair: GroupPair,
    solve_template: SolveParams,
    base_seed: int,
    nonprivate_assignment: Assignment,
    epsilon: float,
    r: int,
) -> _ReplicateOutcome:
    noise_seed = replicate_seed(base_seed, epsilon, r)
    private_counts = privatize_counts(
        district.counts, PrivacyParams(epsilon=epsilon, seed=noise_seed)
    )
    params = replace(
        solve_template, pair=pair, seed=mix_seed(noise_seed, _SEED_PRIVATE_SOLVE)
    )
    result = solve(district, private_counts, params)
    report = compile_report(
        district,
        result.assignment,
        pair,
        scenario="private",
        epsilon=epsilon,
        replicate=r,
        nonprivate=nonprivate_assignment,
    )
    return _ReplicateOutcome(
        epsilon=epsilon,
        replicate=r,
        report=report,
        school_of=dict(result.assignment.school_of),
        iterations=result.iterations,
    )


_WORKER_CTX: tuple | None = None


def _pool_job(job: tuple[float, int]) -> _ReplicateOutcome:
    district, pair, solve_template, base_seed, nonprivate_assignment = _WORKER_CTX
    eps, r = job
    return _run_private_replicate(
        district, pair, solve_template, base_seed, nonprivate_assignment, eps, r
    )


def _modal_assignment(
    district: District, assignments: Sequence[Assignment]
) -> Assignment:
    """Per block, the most frequent destination across replicates (ties: smallest id)."""
    out = {}
    for bid in district.block_ids:
        tally: dict[str, int] = {}
        for a in assignments:
            sid = a[bid]
            tally[sid] = tally.get(sid, 0) + 1
        best = max(sorted(tally), key=lambda sid: tally[sid])
        out[bid] = best
    return Assignment(out)


def run_experiment(district: District, config: ExperimentConfig) -> ExperimentResult:
    """Run the full three-scenario experiment; deterministic given the config.

    Private replicates run in a worker pool when config.workers > 1; each
    (epsilon, replicate) cell derives its own seeds, and aggregation folds in
    replicate-index order, so results do not depend on scheduling.
    """
    global _WORKER_CTX
    t0 = time.perf_counter()
    pair = config.pair()
    for g in pair.focal | (pair.complement or frozenset()):
        if g not in district.groups:
            raise ValueError(
                f"objective group {g!r} not in district counts groups {district.groups}"
            )

    current_report = compile_report(district, district.current, pair, scenario="current")

    nonpriv_params = replace(
        config.solve, pair=pair, seed=mix_seed(config.base_seed, _SEED_NONPRIVATE_SOLVE)
    )
    nonpriv = solve(district, district.counts, nonpriv_params)
    nonpriv_report = compile_report(
        district, nonpriv.assignment, pair, scenario="nonprivate"
    )

    jobs = [(eps, r) for eps in config.epsilons for r in range(config.replicates)]
    if config.workers > 1 and len(jobs) > 1:
        ctx = multiprocessing.get_context("fork")
        _WORKER_CTX = (district, pair, config.solve, config.base_seed, nonpriv.assignment)
        try:
            with ctx.Pool(processes=config.workers) as pool:
                outcomes = pool.map(_pool_job, jobs, chunksize=1)
        finally:
            _WORKER_CTX = None
    else:
        outcomes = [
            _run_private_replicate(
                district, pair, config.solve, config.base_seed,
                nonpriv.assignment, eps, r,
            )
            for eps, r in jobs
        ]

    by_eps: dict[float, list[_ReplicateOutcome]] = {e: [] for e in config.epsilons}
    for oc in outcomes:
        by_eps[oc.epsilon].append(oc)

    summaries = []
    for eps in config.epsilons:
        cells = sorted(by_eps[eps], key=lambda oc: oc.replicate)
        reports = tuple(oc.report for oc in cells)
        assignments = [Assignment(oc.school_of) for oc in cells]
        dis = [rep.dissimilarity for rep in reports]
        rez = [float(rep.blocks_rezoned) for rep in reports]
        ci_rng = rng_from_seed(
            mix_seed(config.base_seed, _SEED_BOOTSTRAP, round(eps * 1_000_000))
        )
        di_ci = bootstrap_ci(dis, n_boot=config.bootstrap_samples, rng=ci_rng)
        rez_ci = bootstrap_ci(rez, n_boot=config.bootstrap_samples, rng=ci_rng)
        groups = district.groups
        summaries.append(
            EpsilonSummary(
                epsilon=eps,
                reports=reports,
                mean_dissimilarity=float(np.mean(dis)),
                dissimilarity_ci=di_ci,
                mean_blocks_rezoned=float(np.mean(rez)),
                blocks_rezoned_ci=rez_ci,
                mean_travel_by_group={
                    g: float(np.mean([rep.travel_by_group[g] for rep in reports]))
                    for g in groups
                },
                mean_pct_rezoned_by_group={
                    g: float(np.mean([rep.pct_rezoned_by_group[g] for rep in reports]))
                    for g in groups
                },
                rezone_freq=rezone_frequency(assignments, district.current),
                modal_assignment=_modal_assignment(district, assignments),
            )
        )

    return ExperimentResult(
        config=config,
        district=district,
        current=current_report,
        nonprivate=nonpriv_report,
        nonprivate_assignment=nonpriv.assignment,
        nonprivate_solve=nonpriv,
        per_epsilon=tuple(summaries),
        elapsed_seconds=time.perf_counter() - t0,
        created_at=_dt.datetime.now(_dt.timezone.utc).isoformat(),
    )


def _fmt_eps(eps: float) -> str:
    return f"{eps:g}"


def _pct_reduction(baseline: float, value: float) -> float:
    """Percent decrease of `value` relative to `baseline` (0 when baseline is 0)."""
    if baseline == 0:
        return 0.0
    return (baseline - value) / baseline * 100.0


def results_json_dict(result: ExperimentResult) -> dict:
    """Serializable view of an experiment; `timing` is the only varying subtree."""
    d = result.district
    return {
        "schema": RESULTS_SCHEMA,
        "version": __version__,
        "config": result.config.to_json_dict(),
        "district": {
            "name": d.name,
            "n_blocks": d.n_blocks,
            "n_schools": d.n_schools,
            "groups": list(d.groups),
            "group_totals": {g: int(d.counts.group_row(g).sum()) for g in d.groups},
            "total_students": int(d.counts.totals.sum()),
            "pinned_blocks": sorted(d.pinned_block_ids()),
        },
        "current": result.current.to_json_dict(),
        "nonprivate": {
            **result.nonprivate.to_json_dict(),
            "objective_on_solver_counts": result.nonprivate_solve.objective,
            "proven_optimal": result.nonprivate_solve.proven_optimal,
            "iterations": result.nonprivate_solve.iterations,
            "pct_di_reduction": _pct_reduction(
                result.current.dissimilarity, result.nonprivate.dissimilarity
            ),
        },
        "private": [
            {
                "epsilon": s.epsilon,
                "mean_dissimilarity": s.mean_dissimilarity,
                "dissimilarity_ci": list(s.dissimilarity_ci),
                "mean_blocks_rezoned": s.mean_blocks_rezoned,
                "blocks_rezoned_ci": list(s.blocks_rezoned_ci),
                "mean_travel_by_group": s.mean_travel_by_group,
                "mean_pct_rezoned_by_group": s.mean_pct_rezoned_by_group,
                # both statistics of the per-replicate reduction vs the current
                # plan, since either may be the one a reader wants to quote
                "mean_pct_di_reduction": float(np.mean([
                    _pct_reduction(result.current.dissimilarity, rep.dissimilarity)
                    for rep in s.reports
                ])),
                "median_pct_di_reduction": float(np.median([
                    _pct_reduction(result.current.dissimilarity, rep.dissimilarity)
                    for rep in s.reports
                ])),
                "replicates": [rep.to_json_dict() for rep in s.reports],
                "rezone_frequency": {bid: s.rezone_freq[bid] for bid in sorted(s.rezone_freq)},
            }
            for s in result.per_epsilon
        ],
        # Execution provenance that may vary without affecting results: the
        # determinism contract is byte-identical output after deleting this key.
        "timing": {
            "created_at": result.created_at,
            "elapsed_seconds": result.elapsed_seconds,
            "workers": result.config.workers,
        },
    }


def emit_report(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write the run's artifact set; returns the paths written.

    Files: results.json, metrics.csv, rezone_frequency.csv, one assignment CSV
    per scenario (private scenarios as the per-epsilon modal assignment), and
    district.geojson when every block has a centroid.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    d = result.district

    path = out / "results.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(results_json_dict(result), fh, indent=2, sort_keys=True)
        fh.write("\n")
    written.append(path)

    path = out / "metrics.csv"
    groups = d.groups
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(metrics_csv_header(groups)) + "\n")
        fh.write(",".join(metrics_csv_row(result.current, groups)) + "\n")
        fh.write(",".join(metrics_csv_row(result.nonprivate, groups)) + "\n")
        for s in result.per_epsilon:
            for rep in s.reports:
                fh.write(",".join(metrics_csv_row(rep, groups)) + "\n")
            mean_cells = (
                ["private_mean", _fmt_eps(s.epsilon), "", f"{s.mean_dissimilarity:.6f}",
                 f"{s.mean_blocks_rezoned:.6f}"]
                + [f"{s.mean_travel_by_group[g]:.6f}" for g in groups]
                + [f"{s.mean_pct_rezoned_by_group[g]:.6f}" for g in groups]
                + ["", "", ""]
            )
            fh.write(",".join(mean_cells) + "\n")
    written.append(path)

    path = out / "rezone_frequency.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("block_id,epsilon,fraction\n")
        for s in result.per_epsilon:
            for bid in d.block_ids:
                fh.write(f"{bid},{_fmt_eps(s.epsilon)},{s.rezone_freq[bid]:.6f}\n")
    written.append(path)

    path = out / "assignment_current.csv"
    write_assignment_csv(path, d.current)
    written.append(path)
    path = out / "assignment_nonprivate.csv"
    write_assignment_csv(path, result.nonprivate_assignment)
    written.append(path)
    for s in result.per_epsilon:
        path = out / f"assignment_private_mean_eps{_fmt_eps(s.epsilon)}.csv"
        write_assignment_csv(path, s.modal_assignment)
        written.append(path)

    if all(b.centroid is not None for b in d.blocks):
        features = []
        for i, b in enumerate(d.blocks):
            props = {
                "block_id": b.id,
                "block_group_id": b.block_group_id,
                "n_total": int(d.counts.totals[i]),
                "current": d.current[b.id],
                "nonprivate": result.nonprivate_assignment[b.id],
            }
            for s in result.per_epsilon:
                tag = _fmt_eps(s.epsilon)
                props[f"private_mean_eps{tag}"] = s.modal_assignment[b.id]
                props[f"rezone_prob_eps{tag}"] = s.rezone_freq[b.id]
            features.append(
                {
                    "type": "Feature",
                    "geometry": {
                        "type": "Point",
                        # GeoJSON wants (lon, lat)
                        "coordinates": [b.centroid[1], b.centroid[0]],
                    },
                    "properties": props,
                }
            )
        path = out / "district.geojson"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"type": "FeatureCollection", "features": features}, fh, sort_keys=True)
            fh.write("\n")
        written.append(path)

    return written


@dataclass(frozen=True)
class DistrictFeatures:
    """Per-district covariates for the privacy-gap regression."""

    name: str
    pct_white: float
    pct_black: float
    pct_asian: float
    pct_native: float
    pct_hispanic: float
    n_students: int
    n_schools: int
    locale: str

    @staticmethod
    def from_district(district: District, locale: str = "suburban") -> "DistrictFeatures":
        total = max(int(district.counts.totals.sum()), 1)

        def share(group: str) -> float:
            if group not in district.groups:
                return 0.0
            return int(district.counts.group_row(group).sum()) / total

        return DistrictFeatures(
            name=district.name,
            pct_white=share("white"),
            pct_black=share("black"),
            pct_asian=share("asian"),
            pct_native=share("native"),
            pct_hispanic=share("hispanic"),
            n_students=total,
            n_schools=district.n_schools,
            locale=locale,
        )


def build_regression_table(
    entries: Sequence[tuple[DistrictFeatures, ExperimentResult]],
    epsilon: float | None = None,
) -> RegressionResult:
    """Regress the privacy gap on district features across many districts.

    The dependent variable is mean private dissimilarity minus non-private
    dissimilarity at the chosen epsilon (default: the smallest one present).
    Constant or collinear columns are dropped with a warning before fitting.
    """
    if not entries:
        raise ValueError("no experiment results supplied")

    ys = []
    rows = []
    for feats, result in entries:
        eps_values = [s.epsilon for s in result.per_epsilon]
        eps = epsilon if epsilon is not None else min(eps_values)
        matches = [s for s in result.per_epsilon if s.epsilon == eps]
        if not matches:
            raise ValueError(f"experiment for {feats.name} has no epsilon {eps}")
        gap = matches[0].mean_dissimilarity - result.nonprivate.dissimilarity
        ys.append(gap)
        rows.append(
            [
                1.0,
                feats.pct_white,
                feats.pct_black,
                feats.pct_asian,
                feats.pct_native,
                feats.pct_hispanic,
                feats.n_students / 1000.0,
                float(feats.n_schools),
            ]
            + [1.0 if feats.locale == loc else 0.0 for loc in LOCALES]
            + [result.current.dissimilarity]
        )

    names = (
        ["intercept", "pct_white", "pct_black", "pct_asian", "pct_native",
         "pct_hispanic", "students_thousands", "n_schools"]
        + [f"locale_{loc}" for loc in LOCALES]
        + ["current_dissimilarity"]
    )
    X = np.array(rows, dtype=float)
    y = np.array(ys, dtype=float)
    X_kept, kept_names, dropped = repair_rank(X, names)
    fit = ols_regress(X_kept, y, feature_names=kept_names)
    return replace(fit, dropped=dropped)
