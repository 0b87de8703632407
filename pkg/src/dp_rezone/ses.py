"""Socioeconomic-status index: z-score composite over block-group variables.

Five block-group variables are standardized independently, averaged, and the
average is standardized again; block groups with a final score above zero are
high-SES, the rest low-SES. Every block inherits its block group's label, and
the resulting two-group counts matrix plugs into the same solve/metrics
pipeline as the racial one.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .district import SES_GROUPS, CountsMatrix, District, DistrictError

SES_VARIABLES = (
    "pct_dual_parent",
    "pct_bachelors",
    "pct_non_english",
    "pct_owner_occupied",
    "median_family_income",
)


@dataclass(frozen=True)
class BlockGroupVars:
    block_group_id: str
    pct_dual_parent: float
    pct_bachelors: float
    pct_non_english: float
    pct_owner_occupied: float
    median_family_income: float

    def __post_init__(self) -> None:
        for name in SES_VARIABLES[:4]:
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{self.block_group_id}: {name}={v} outside [0, 1]")
        if self.median_family_income < 0:
            raise ValueError(f"{self.block_group_id}: negative median_family_income")


@dataclass(frozen=True)
class SesScore:
    block_group_id: str
    composite_z: float
    label: str  # "high" iff composite_z > 0, else "low"


def _zscore(values: np.ndarray) -> np.ndarray:
    # Population standard deviation; a constant variable contributes z = 0.
    sd = float(values.std(ddof=0))
    if sd == 0.0:
        return np.zeros_like(values)
    return (values - values.mean()) / sd


def compute_ses(rows: Sequence[BlockGroupVars]) -> list[SesScore]:
    """Composite SES score and high/low label per block group.

    Each variable is z-scored across block groups, the five z-scores are
    averaged, and that average is z-scored again; the final score's sign
    decides the label (ties at exactly 0 classify as low).
    """
    if len(rows) < 2:
        raise ValueError("compute_ses needs at least 2 block groups")
    ids = [r.block_group_id for r in rows]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate block_group_id in SES input")

    per_var = np.stack(
        [_zscore(np.array([getattr(r, v) for r in rows], dtype=float)) for v in SES_VARIABLES]
    )
    composite = _zscore(per_var.mean(axis=0))
    # snap float dust to an exact 0 so the strict "above average" rule is stable
    composite[np.abs(composite) < 1e-12] = 0.0
    return [
        SesScore(block_group_id=ids[i], composite_z=float(composite[i]),
                 label="high" if composite[i] > 0 else "low")
        for i in range(len(rows))
    ]


def build_ses_counts(district: District, scores: Sequence[SesScore]) -> CountsMatrix:
    """Two-group counts matrix (low_ses, high_ses) from block-group labels.

    Every student in a block inherits the block group's label, so a block
    contributes its whole total to one side; per-block totals are unchanged.
    """
    label_of = {s.block_group_id: s.label for s in scores}
    totals = district.counts.totals
    data = np.zeros((3, district.n_blocks), dtype=np.int64)
    for i, b in enumerate(district.blocks):
        label = label_of.get(b.block_group_id)
        if label is None:
            raise DistrictError(f"no SES score for block group {b.block_group_id}")
        data[1 if label == "high" else 0, i] = totals[i]
    data[2] = totals
    return CountsMatrix(groups=SES_GROUPS, block_ids=district.block_ids, data=data)


def load_ses_csv(path: str | Path) -> list[BlockGroupVars]:
    path = Path(path)
    if not path.exists():
        raise DistrictError(f"missing input file: {path}")
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        required = ("block_group_id",) + SES_VARIABLES
        if reader.fieldnames is None or any(c not in reader.fieldnames for c in required):
            raise DistrictError(f"{path.name}: header must contain {required}")
        for row in reader:
            out.append(
                BlockGroupVars(
                    block_group_id=row["block_group_id"].strip(),
                    **{v: float(row[v]) for v in SES_VARIABLES},
                )
            )
    return out


def write_ses_csv(path: str | Path, rows: Sequence[BlockGroupVars]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(("block_group_id",) + SES_VARIABLES)
        for r in rows:
            w.writerow(
                [r.block_group_id]
                + [f"{getattr(r, v):.6f}" for v in SES_VARIABLES[:4]]
                + [f"{r.median_family_income:.2f}"]
            )
