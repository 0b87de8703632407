"""Outcome measures: segregation, travel, and rezoning statistics.

All of these are evaluated on whatever counts matrix the caller passes in.
The experiment harness always passes ground-truth counts here even when the
solver ran on privatized counts; that separation is the harness's contract,
not this module's.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .district import Assignment, CountsMatrix, District, TravelTimeMatrix

log = logging.getLogger(__name__)


class DegenerateDistrictError(ValueError):
    """A district-wide group total is zero on ground-truth counts."""


@dataclass(frozen=True)
class GroupPair:
    """Objective pair: focal group(s) vs an explicit complement or 'the rest'.

    complement=None means "total minus focal" per block, clamped at zero on
    privatized counts where independent noise can push the difference negative.
    """

    focal: frozenset[str]
    complement: frozenset[str] | None = None

    def __post_init__(self) -> None:
        if not self.focal:
            raise ValueError("focal group set must be non-empty")
        if self.complement is not None and self.focal & self.complement:
            raise ValueError("focal and complement groups overlap")

    @staticmethod
    def white_vs_rest() -> "GroupPair":
        return GroupPair(focal=frozenset({"white"}), complement=None)

    @staticmethod
    def ses() -> "GroupPair":
        return GroupPair(focal=frozenset({"low_ses"}), complement=frozenset({"high_ses"}))

    def swapped(self) -> "GroupPair":
        if self.complement is None:
            raise ValueError("cannot swap an implicit total-minus-focal pair")
        return GroupPair(focal=self.complement, complement=self.focal)


def side_counts(counts: CountsMatrix, pair: GroupPair) -> tuple[np.ndarray, np.ndarray]:
    """Per-block (focal, complement) student counts as int64 arrays."""
    focal = np.zeros(counts.n_blocks, dtype=np.int64)
    for g in pair.focal:
        focal += counts.group_row(g)
    if pair.complement is None:
        comp = np.maximum(counts.totals - focal, 0)
    else:
        comp = np.zeros(counts.n_blocks, dtype=np.int64)
        for g in pair.complement:
            comp += counts.group_row(g)
    return focal, comp


def side_denominators(
    counts: CountsMatrix, focal: np.ndarray, comp: np.ndarray
) -> tuple[int, int]:
    """District-wide side totals with the zero-denominator convention applied.

    Ground-truth counts with an empty side are a modelling error and raise;
    privatized counts replace a zero total with 1 so batch runs stay alive.
    """
    w, c = int(focal.sum()), int(comp.sum())
    if w == 0 or c == 0:
        if not counts.privatized:
            side = "focal" if w == 0 else "complement"
            raise DegenerateDistrictError(
                f"{side} side has zero students district-wide on ground-truth counts"
            )
        w, c = max(w, 1), max(c, 1)
    return w, c


def dissimilarity(assignment: Assignment, counts: CountsMatrix, pair: GroupPair) -> float:
    """Dissimilarity index: half the sum over schools of |focal share - complement share|.

    0 means every school mirrors the district-wide composition; 1 means the
    two sides never attend the same school.
    """
    focal, comp = side_counts(counts, pair)
    dw, dc = side_denominators(counts, focal, comp)
    f_by_school: dict[str, int] = {}
    c_by_school: dict[str, int] = {}
    for i, bid in enumerate(counts.block_ids):
        sid = assignment[bid]
        f_by_school[sid] = f_by_school.get(sid, 0) + int(focal[i])
        c_by_school[sid] = c_by_school.get(sid, 0) + int(comp[i])
    di = 0.5 * sum(
        abs(f_by_school[s] / dw - c_by_school[s] / dc) for s in f_by_school
    )
    return min(max(di, 0.0), 1.0)


def avg_travel_time(
    assignment: Assignment,
    travel: TravelTimeMatrix,
    counts: CountsMatrix,
    group: str,
) -> float:
    """Student-weighted mean travel time (minutes) to the assigned school for one group."""
    weights = counts.group_row(group)
    total = int(weights.sum())
    if total == 0:
        log.warning("avg_travel_time: group %r has zero students; reporting 0", group)
        return 0.0
    acc = 0.0
    for i, bid in enumerate(counts.block_ids):
        w = int(weights[i])
        if w:
            acc += w * travel.minutes_for(bid, assignment[bid])
    return acc / total


def pct_rezoned(
    assignment: Assignment,
    current: Assignment,
    counts: CountsMatrix,
    group: str,
) -> float:
    """Fraction of the group's students living in blocks whose school changed."""
    weights = counts.group_row(group)
    total = int(weights.sum())
    if total == 0:
        log.warning("pct_rezoned: group %r has zero students; reporting 0", group)
        return 0.0
    moved = sum(
        int(weights[i])
        for i, bid in enumerate(counts.block_ids)
        if assignment[bid] != current[bid]
    )
    return moved / total


@dataclass(frozen=True)
class RezoneOverlap:
    """How the private plan's rezoned blocks relate to the non-private plan's.

    coincide + private_only partition the private plan's rezoned blocks
    (fractions of that set); nonprivate_only is the fraction of the
    non-private plan's rezoned blocks the private plan left at their current
    school. Fractions are None when the corresponding plan rezones nothing.
    """

    n_private_rezoned: int
    n_nonprivate_rezoned: int
    n_coincide: int
    coincide: float | None
    private_only: float | None
    nonprivate_only: float | None


def rezone_overlap(
    private_assignment: Assignment,
    nonprivate_assignment: Assignment,
    current: Assignment,
) -> RezoneOverlap:
    priv_moved = {
        b for b, s in private_assignment.items() if s != current[b]
    }
    nonpriv_moved = {
        b for b, s in nonprivate_assignment.items() if s != current[b]
    }
    coincide = {
        b for b in priv_moved if private_assignment[b] == nonprivate_assignment[b]
    }
    nonpriv_only = {b for b in nonpriv_moved if b not in priv_moved}
    return RezoneOverlap(
        n_private_rezoned=len(priv_moved),
        n_nonprivate_rezoned=len(nonpriv_moved),
        n_coincide=len(coincide),
        coincide=len(coincide) / len(priv_moved) if priv_moved else None,
        private_only=(len(priv_moved) - len(coincide)) / len(priv_moved) if priv_moved else None,
        nonprivate_only=len(nonpriv_only) / len(nonpriv_moved) if nonpriv_moved else None,
    )


def rezone_frequency(
    assignments: Sequence[Assignment], current: Assignment
) -> dict[str, float]:
    """Per block, the fraction of replicate assignments that moved it."""
    if not assignments:
        raise ValueError("rezone_frequency needs at least one assignment")
    n = len(assignments)
    return {
        bid: sum(1 for a in assignments if a[bid] != cur_sid) / n
        for bid, cur_sid in current.items()
    }


def bootstrap_ci(
    samples: Sequence[float],
    level: float = 0.95,
    n_boot: int = 1000,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean; deterministic given the rng seed."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("bootstrap_ci needs a non-empty sample")
    if not (0.0 < level < 1.0):
        raise ValueError("level must be in (0, 1)")
    if rng is None:
        rng = np.random.default_rng(0)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    means = x[idx].mean(axis=1)
    lo, hi = np.quantile(means, [(1 - level) / 2, 1 - (1 - level) / 2])
    return float(lo), float(hi)


@dataclass(frozen=True)
class OutcomeReport:
    """One scenario's outcome measures, always computed on ground-truth counts."""

    scenario: str  # current | nonprivate | private
    dissimilarity: float
    travel_by_group: dict[str, float]
    pct_rezoned_by_group: dict[str, float]
    blocks_rezoned: int
    epsilon: float | None = None
    replicate: int | None = None
    overlap: RezoneOverlap | None = None
    warnings: tuple[str, ...] = ()

    def to_json_dict(self) -> dict:
        out = {
            "scenario": self.scenario,
            "dissimilarity": self.dissimilarity,
            "travel_by_group": dict(self.travel_by_group),
            "pct_rezoned_by_group": dict(self.pct_rezoned_by_group),
            "blocks_rezoned": self.blocks_rezoned,
        }
        if self.epsilon is not None:
            out["epsilon"] = self.epsilon
        if self.replicate is not None:
            out["replicate"] = self.replicate
        if self.overlap is not None:
            out["overlap"] = {
                "n_private_rezoned": self.overlap.n_private_rezoned,
                "n_nonprivate_rezoned": self.overlap.n_nonprivate_rezoned,
                "n_coincide": self.overlap.n_coincide,
                "coincide": self.overlap.coincide,
                "private_only": self.overlap.private_only,
                "nonprivate_only": self.overlap.nonprivate_only,
            }
        if self.warnings:
            out["warnings"] = list(self.warnings)
        return out


def compile_report(
    district: District,
    assignment: Assignment,
    pair: GroupPair,
    scenario: str,
    epsilon: float | None = None,
    replicate: int | None = None,
    nonprivate: Assignment | None = None,
) -> OutcomeReport:
    """Evaluate every outcome measure for one assignment on ground-truth counts."""
    counts = district.counts
    warnings: list[str] = []
    travel_by_group = {}
    pct_by_group = {}
    for g in counts.groups:
        if int(counts.group_row(g).sum()) == 0:
            warnings.append(f"group {g} has zero students district-wide")
        travel_by_group[g] = avg_travel_time(assignment, district.travel, counts, g)
        pct_by_group[g] = pct_rezoned(assignment, district.current, counts, g)
    blocks_rezoned = sum(
        1 for bid, sid in assignment.items() if sid != district.current[bid]
    )
    overlap = None
    if nonprivate is not None:
        overlap = rezone_overlap(assignment, nonprivate, district.current)
    return OutcomeReport(
        scenario=scenario,
        dissimilarity=dissimilarity(assignment, counts, pair),
        travel_by_group=travel_by_group,
        pct_rezoned_by_group=pct_by_group,
        blocks_rezoned=blocks_rezoned,
        epsilon=epsilon,
        replicate=replicate,
        overlap=overlap,
        warnings=tuple(warnings),
    )


def metrics_csv_header(groups: Sequence[str]) -> list[str]:
    """Column order for metrics.csv, fixed and documented in the README."""
    return (
        ["scenario", "epsilon", "replicate", "dissimilarity", "blocks_rezoned"]
        + [f"travel_{g}" for g in groups]
        + [f"pct_rezoned_{g}" for g in groups]
        + ["overlap_coincide", "overlap_private_only", "overlap_nonprivate_only"]
    )


def metrics_csv_row(report: OutcomeReport, groups: Sequence[str]) -> list[str]:
    def fmt(v: float | None) -> str:
        return "" if v is None else f"{v:.6f}"

    ov = report.overlap
    return (
        [
            report.scenario,
            "" if report.epsilon is None else f"{report.epsilon:g}",
            "" if report.replicate is None else str(report.replicate),
            f"{report.dissimilarity:.6f}",
            str(report.blocks_rezoned),
        ]
        + [f"{report.travel_by_group[g]:.6f}" for g in groups]
        + [f"{report.pct_rezoned_by_group[g]:.6f}" for g in groups]
        + [
            fmt(ov.coincide if ov else None),
            fmt(ov.private_only if ov else None),
            fmt(ov.nonprivate_only if ov else None),
        ]
    )
