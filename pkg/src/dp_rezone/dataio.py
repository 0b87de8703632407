"""CSV ingestion and serialization for district data.

File schemas (all UTF-8 with a header row):
  blocks.csv:     block_id, block_group_id, lat, lon, n_white, n_black,
                  n_asian, n_native, n_hispanic, n_total
  adjacency.csv:  block_id_a, block_id_b (undirected, deduplicated on load)
  schools.csv:    school_id, name, root_block_id
  travel.csv:     block_id, school_id, minutes (optional input)
  assignment.csv: block_id, school_id
  ses.csv:        block_group_id, pct_dual_parent, pct_bachelors,
                  pct_non_english, pct_owner_occupied, median_family_income
"""
from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import numpy as np

from .district import (
    RACIAL_GROUPS,
    Assignment,
    Block,
    CountsMatrix,
    District,
    DistrictError,
    School,
    TravelTimeMatrix,
    build_district,
)

BLOCKS_HEADER = (
    "block_id",
    "block_group_id",
    "lat",
    "lon",
    "n_white",
    "n_black",
    "n_asian",
    "n_native",
    "n_hispanic",
    "n_total",
)


def _read_rows(path: str | Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    path = Path(path)
    if not path.exists():
        raise DistrictError(f"missing input file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise DistrictError(f"{path.name}: empty file, header required")
        missing = [col for col in required if col not in reader.fieldnames]
        if missing:
            raise DistrictError(f"{path.name}: missing columns {missing}")
        return [row for row in reader]


def _parse_count(raw: str, where: str) -> int:
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise DistrictError(f"{where}: count {raw!r} is not an integer") from None
    if value < 0:
        raise DistrictError(f"{where}: negative count {value}")
    return value


def load_district(
    blocks_path: str | Path,
    adjacency_path: str | Path,
    schools_path: str | Path,
    assignment_path: str | Path,
    travel_path: str | Path | None = None,
    name: str = "district",
) -> District:
    """Load and validate a district from its CSV files.

    Adjacency is treated as undirected: a pair listed in one direction is
    normalized to a symmetric edge. When travel_path is omitted, travel times
    are synthesized from block centroids (see district.haversine_minutes).
    """
    block_rows = _read_rows(blocks_path, BLOCKS_HEADER)
    if not block_rows:
        raise DistrictError("blocks.csv has no data rows")

    seen: set[str] = set()
    counts_cols: dict[str, list[int]] = {}
    centroids: dict[str, tuple[float, float] | None] = {}
    group_of: dict[str, str] = {}
    for row in block_rows:
        bid = row["block_id"].strip()
        if not bid:
            raise DistrictError("blocks.csv: empty block_id")
        if bid in seen:
            raise DistrictError(f"duplicate block id {bid}")
        seen.add(bid)
        group_of[bid] = row["block_group_id"].strip()
        lat, lon = row["lat"].strip(), row["lon"].strip()
        if lat and lon:
            centroids[bid] = (float(lat), float(lon))
        else:
            centroids[bid] = None
        counts_cols[bid] = [
            _parse_count(row[f"n_{g}"], f"block {bid}") for g in RACIAL_GROUPS
        ] + [_parse_count(row["n_total"], f"block {bid}")]

    edges: set[tuple[str, str]] = set()
    for row in _read_rows(adjacency_path, ("block_id_a", "block_id_b")):
        a, b = row["block_id_a"].strip(), row["block_id_b"].strip()
        if a not in seen or b not in seen:
            raise DistrictError(f"adjacency references unknown block in edge ({a}, {b})")
        if a == b:
            raise DistrictError(f"self-loop adjacency on block {a}")
        edges.add((min(a, b), max(a, b)))
    neighbors: dict[str, set[str]] = defaultdict(set)
    for a, b in edges:
        neighbors[a].add(b)
        neighbors[b].add(a)

    blocks = [
        Block(
            id=bid,
            block_group_id=group_of[bid],
            centroid=centroids[bid],
            neighbors=frozenset(neighbors.get(bid, ())),
        )
        for bid in sorted(seen)
    ]

    schools = []
    for row in _read_rows(schools_path, ("school_id", "name", "root_block_id")):
        schools.append(
            School(
                id=row["school_id"].strip(),
                name=row["name"].strip(),
                root_block_id=row["root_block_id"].strip(),
            )
        )

    assignment_rows = _read_rows(assignment_path, ("block_id", "school_id"))
    school_of = {}
    for row in assignment_rows:
        school_of[row["block_id"].strip()] = row["school_id"].strip()
    current = Assignment(school_of)

    block_ids = tuple(b.id for b in blocks)
    data = np.array([counts_cols[bid] for bid in block_ids], dtype=np.int64).T
    counts = CountsMatrix(groups=RACIAL_GROUPS, block_ids=block_ids, data=data)

    travel = None
    if travel_path is not None:
        school_ids = tuple(sorted(s.id for s in schools))
        bindex = {bid: i for i, bid in enumerate(block_ids)}
        sindex = {sid: j for j, sid in enumerate(school_ids)}
        minutes = np.full((len(block_ids), len(school_ids)), np.nan)
        for row in _read_rows(travel_path, ("block_id", "school_id", "minutes")):
            bid, sid = row["block_id"].strip(), row["school_id"].strip()
            if bid not in bindex or sid not in sindex:
                raise DistrictError(f"travel.csv references unknown pair ({bid}, {sid})")
            minutes[bindex[bid], sindex[sid]] = float(row["minutes"])
        if np.isnan(minutes).any():
            i, j = np.argwhere(np.isnan(minutes))[0]
            raise DistrictError(
                f"travel.csv incomplete: no entry for ({block_ids[i]}, {school_ids[j]})"
            )
        travel = TravelTimeMatrix(block_ids, school_ids, minutes)

    return build_district(blocks, schools, counts, current, travel, name=name)


def load_district_dir(data_dir: str | Path, name: str | None = None) -> District:
    """Load a district from a directory using the conventional file names."""
    d = Path(data_dir)
    travel = d / "travel.csv"
    return load_district(
        d / "blocks.csv",
        d / "adjacency.csv",
        d / "schools.csv",
        d / "assignment.csv",
        travel_path=travel if travel.exists() else None,
        name=name if name is not None else d.name,
    )


def write_assignment_csv(path: str | Path, assignment: Assignment) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["block_id", "school_id"])
        for bid in sorted(assignment.school_of):
            w.writerow([bid, assignment.school_of[bid]])


def read_assignment_csv(path: str | Path) -> Assignment:
    rows = _read_rows(path, ("block_id", "school_id"))
    return Assignment({r["block_id"].strip(): r["school_id"].strip() for r in rows})


def write_district_dir(district: District, out_dir: str | Path) -> None:
    """Write a district back out as the standard CSV file set (round-trippable)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    with open(out / "blocks.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BLOCKS_HEADER)
        for i, b in enumerate(district.blocks):
            lat, lon = ("", "") if b.centroid is None else (
                f"{b.centroid[0]:.6f}",
                f"{b.centroid[1]:.6f}",
            )
            col = district.counts.data[:, i]
            w.writerow([b.id, b.block_group_id, lat, lon, *[int(x) for x in col]])

    with open(out / "adjacency.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["block_id_a", "block_id_b"])
        for b in district.blocks:
            for nb in sorted(b.neighbors):
                if b.id < nb:
                    w.writerow([b.id, nb])

    with open(out / "schools.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["school_id", "name", "root_block_id"])
        for s in district.schools:
            w.writerow([s.id, s.name, s.root_block_id])

    with open(out / "travel.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["block_id", "school_id", "minutes"])
        for i, bid in enumerate(district.block_ids):
            for j, sid in enumerate(district.school_ids):
                w.writerow([bid, sid, f"{district.travel.minutes[i, j]:.6f}"])

    write_assignment_csv(out / "assignment.csv", district.current)
