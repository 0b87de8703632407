"""District data model: blocks, adjacency, schools, student counts, travel times.

Everything downstream (privatization, solving, metrics) operates on the
immutable District built here. Construction validates all cross-references,
computes hop distances from every school root, and derives the
closer-neighbor index that the contiguity constraint relies on.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

RACIAL_GROUPS = ("white", "black", "asian", "native", "hispanic")
SES_GROUPS = ("low_ses", "high_ses")

# Fallback travel synthesis: straight-line distance at a fixed road speed.
FALLBACK_SPEED_KMH = 30.0
EARTH_RADIUS_KM = 6371.0088


class DistrictError(ValueError):
    """Invalid district inputs (bad references, malformed counts, etc.)."""


def haversine_km(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Great-circle distance between two (lat, lon) points in km."""
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * math.asin(math.sqrt(a))


def haversine_minutes(lat1: float, lon1: float, lat2: float, lon2: float) -> float:
    """Travel-time proxy: straight-line distance at FALLBACK_SPEED_KMH, in minutes."""
    return haversine_km(lat1, lon1, lat2, lon2) / FALLBACK_SPEED_KMH * 60.0


@dataclass(frozen=True)
class Block:
    id: str
    block_group_id: str
    centroid: tuple[float, float] | None  # (lat, lon) degrees
    neighbors: frozenset[str]


@dataclass(frozen=True)
class School:
    id: str
    name: str
    root_block_id: str


@dataclass(frozen=True, eq=False)
class CountsMatrix:
    """Per-block student counts: one row per demographic group plus a totals row.

    `data` has shape (len(groups) + 1, n_blocks); the last row is the total
    count per block. Ground-truth matrices must satisfy total >= sum of group
    counts per block; privatized matrices are exempt because independent noise
    plus clamping can break that relation.
    """

    groups: tuple[str, ...]
    block_ids: tuple[str, ...]
    data: np.ndarray
    privatized: bool = False

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.int64)
        object.__setattr__(self, "data", data)
        if len(set(self.groups)) != len(self.groups):
            raise DistrictError("duplicate group labels in counts matrix")
        if data.shape != (len(self.groups) + 1, len(self.block_ids)):
            raise DistrictError(
                f"counts matrix shape {data.shape} does not match "
                f"{len(self.groups)} groups + totals x {len(self.block_ids)} blocks"
            )
        if (data < 0).any():
            raise DistrictError("negative entries in counts matrix")
        if not self.privatized:
            short = data[-1] < data[:-1].sum(axis=0)
            if short.any():
                bad = self.block_ids[int(np.argmax(short))]
                raise DistrictError(
                    f"block {bad}: total count is less than the sum of group counts"
                )
        object.__setattr__(
            self, "_group_index", {g: i for i, g in enumerate(self.groups)}
        )
        object.__setattr__(
            self, "_block_index", {b: i for i, b in enumerate(self.block_ids)}
        )

    @property
    def n_blocks(self) -> int:
        return len(self.block_ids)

    @property
    def totals(self) -> np.ndarray:
        return self.data[-1]

    def group_row(self, group: str) -> np.ndarray:
        try:
            return self.data[self._group_index[group]]
        except KeyError:
            raise KeyError(f"group {group!r} not in counts matrix") from None

    def block_column(self, block_id: str) -> np.ndarray:
        return self.data[:, self._block_index[block_id]]

    def scaled(self, k: int) -> "CountsMatrix":
        """Uniform integer scaling of every entry (used by share-invariance tests)."""
        if k < 1:
            raise ValueError("scale factor must be a positive integer")
        return CountsMatrix(self.groups, self.block_ids, self.data * k, self.privatized)


@dataclass(frozen=True, eq=False)
class TravelTimeMatrix:
    block_ids: tuple[str, ...]
    school_ids: tuple[str, ...]
    minutes: np.ndarray  # (n_blocks, n_schools)

    def __post_init__(self) -> None:
        m = np.asarray(self.minutes, dtype=np.float64)
        object.__setattr__(self, "minutes", m)
        if m.shape != (len(self.block_ids), len(self.school_ids)):
            raise DistrictError("travel matrix shape does not match block/school ids")
        if not np.isfinite(m).all():
            raise DistrictError("travel matrix has non-finite entries")
        if (m < 0).any():
            raise DistrictError("travel matrix has negative entries")
        object.__setattr__(
            self, "_block_index", {b: i for i, b in enumerate(self.block_ids)}
        )
        object.__setattr__(
            self, "_school_index", {s: i for i, s in enumerate(self.school_ids)}
        )

    def minutes_for(self, block_id: str, school_id: str) -> float:
        return float(self.minutes[self._block_index[block_id], self._school_index[school_id]])


@dataclass(frozen=True)
class Assignment:
    """Total map block id -> school id (every block assigned to exactly one school)."""

    school_of: Mapping[str, str]

    def __getitem__(self, block_id: str) -> str:
        return self.school_of[block_id]

    def __len__(self) -> int:
        return len(self.school_of)

    def items(self):
        return self.school_of.items()

    def to_indices(self, district: "District") -> np.ndarray:
        out = np.empty(len(district.blocks), dtype=np.int64)
        for bid, sid in self.school_of.items():
            out[district.block_index[bid]] = district.school_index[sid]
        return out

    @staticmethod
    def from_indices(district: "District", idx: Sequence[int]) -> "Assignment":
        school_ids = district.school_ids
        return Assignment(
            {district.block_ids[b]: school_ids[int(s)] for b, s in enumerate(idx)}
        )


@dataclass(frozen=True, eq=False)
class CloserNeighborIndex:
    """Hop distances and, per (block, school), the neighbors strictly closer to the root.

    dist[b, s] is the hop distance from block b to the root block of school s,
    -1 when unreachable. closer[b][s] holds the indices of b's neighbors with
    strictly smaller distance to s (ties excluded). The root block of s has an
    empty set and is exempt from the contiguity rule for s.
    """

    dist: np.ndarray  # (n_blocks, n_schools) int32, -1 = unreachable
    closer: tuple[tuple[tuple[int, ...], ...], ...]


@dataclass(frozen=True, eq=False)
class District:
    blocks: tuple[Block, ...]
    schools: tuple[School, ...]
    counts: CountsMatrix
    travel: TravelTimeMatrix
    current: Assignment
    closer: CloserNeighborIndex
    groups: tuple[str, ...]
    name: str = "district"
    # Derived lookups, filled by build_district.
    block_ids: tuple[str, ...] = ()
    school_ids: tuple[str, ...] = ()
    block_index: dict[str, int] = field(default_factory=dict)
    school_index: dict[str, int] = field(default_factory=dict)
    neighbors_idx: tuple[tuple[int, ...], ...] = ()
    root_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    current_idx: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    pinned: frozenset[int] = frozenset()

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    @property
    def n_schools(self) -> int:
        return len(self.schools)

    def pinned_block_ids(self) -> frozenset[str]:
        return frozenset(self.block_ids[i] for i in self.pinned)


def _bfs_hops(neighbors_idx: Sequence[Sequence[int]], root: int, n: int) -> np.ndarray:
    dist = np.full(n, -1, dtype=np.int32)
    dist[root] = 0
    q = deque([root])
    while q:
        u = q.popleft()
        du = dist[u]
        for v in neighbors_idx[u]:
            if dist[v] < 0:
                dist[v] = du + 1
                q.append(v)
    return dist


def hop_distances(district: District, school_id: str) -> dict[str, int | None]:
    """Hop distance from every block to the school's root block; None = unreachable."""
    s = district.school_index[school_id]
    col = district.closer.dist[:, s]
    return {
        bid: (int(d) if d >= 0 else None)
        for bid, d in zip(district.block_ids, col)
    }


def build_closer_neighbors(district: "District") -> CloserNeighborIndex:
    """Recompute the closer-neighbor index from a district's graph and distances."""
    return _closer_index(district.neighbors_idx, district.closer.dist)


def _closer_index(
    neighbors_idx: Sequence[Sequence[int]], dist: np.ndarray
) -> CloserNeighborIndex:
    """Per (block, school): neighbors strictly closer to the school root.

    Strict inequality: a neighbor at equal hop distance does not count. An
    unreachable block (dist -1) gets empty sets; load-time validation rejects
    blocks unreachable from every root.
    """
    n_blocks, n_schools = dist.shape
    closer: list[tuple[tuple[int, ...], ...]] = []
    for b in range(n_blocks):
        per_school: list[tuple[int, ...]] = []
        for s in range(n_schools):
            db = dist[b, s]
            if db <= 0:  # root (0) or unreachable (-1): nothing is closer
                per_school.append(())
                continue
            per_school.append(
                tuple(
                    v
                    for v in neighbors_idx[b]
                    if 0 <= dist[v, s] < db
                )
            )
        closer.append(tuple(per_school))
    return CloserNeighborIndex(dist=dist, closer=tuple(closer))


def closer_neighbors_of(district: District, block_id: str, school_id: str) -> frozenset[str]:
    """Id-level view of the closer-neighbor set C[block][school]."""
    b = district.block_index[block_id]
    s = district.school_index[school_id]
    return frozenset(district.block_ids[v] for v in district.closer.closer[b][s])


def build_district(
    blocks: Iterable[Block],
    schools: Iterable[School],
    counts: CountsMatrix,
    current: Assignment,
    travel: TravelTimeMatrix | None = None,
    name: str = "district",
) -> District:
    """Validate all the pieces and assemble an immutable District.

    Blocks and schools are put in id-sorted order; the counts matrix is
    reindexed to match. When no travel matrix is supplied, travel times are
    synthesized from centroid great-circle distance at a fixed speed, which
    requires every block to carry a centroid.
    """
    block_list = sorted(blocks, key=lambda b: b.id)
    school_list = sorted(schools, key=lambda s: s.id)
    if not block_list:
        raise DistrictError("district has no blocks")
    if not school_list:
        raise DistrictError("district has no schools")

    block_ids = tuple(b.id for b in block_list)
    if len(set(block_ids)) != len(block_ids):
        raise DistrictError("duplicate block ids")
    school_ids = tuple(s.id for s in school_list)
    if len(set(school_ids)) != len(school_ids):
        raise DistrictError("duplicate school ids")

    block_index = {bid: i for i, bid in enumerate(block_ids)}
    school_index = {sid: i for i, sid in enumerate(school_ids)}

    # Neighbor references must resolve, be symmetric, and exclude self-loops.
    for b in block_list:
        if b.id in b.neighbors:
            raise DistrictError(f"block {b.id} listed as its own neighbor")
        for nb in b.neighbors:
            if nb not in block_index:
                raise DistrictError(f"block {b.id} references unknown neighbor {nb}")
            if b.id not in block_list[block_index[nb]].neighbors:
                raise DistrictError(f"asymmetric adjacency between {b.id} and {nb}")
    neighbors_idx = tuple(
        tuple(sorted(block_index[nb] for nb in b.neighbors)) for b in block_list
    )

    for s in school_list:
        if s.root_block_id not in block_index:
            raise DistrictError(f"school {s.id} rooted at unknown block {s.root_block_id}")
    root_idx = np.array([block_index[s.root_block_id] for s in school_list], dtype=np.int64)

    # Reindex counts columns into canonical block order.
    if set(counts.block_ids) != set(block_ids):
        raise DistrictError("counts matrix does not cover exactly the district's blocks")
    if counts.block_ids != block_ids:
        perm = [counts.block_ids.index(bid) for bid in block_ids]
        counts = CountsMatrix(
            counts.groups, block_ids, counts.data[:, perm], counts.privatized
        )

    missing = [bid for bid in block_ids if bid not in current.school_of]
    if missing:
        raise DistrictError(f"assignment not total: missing blocks {missing[:5]}")
    extra = [bid for bid in current.school_of if bid not in block_index]
    if extra:
        raise DistrictError(f"assignment references unknown blocks {extra[:5]}")
    for bid, sid in current.school_of.items():
        if sid not in school_index:
            raise DistrictError(f"assignment maps block {bid} to unknown school {sid}")
    current_idx = np.array(
        [school_index[current.school_of[bid]] for bid in block_ids], dtype=np.int64
    )

    if travel is None:
        minutes = np.empty((len(block_list), len(school_list)))
        for j, s in enumerate(school_list):
            root = block_list[block_index[s.root_block_id]]
            if root.centroid is None:
                raise DistrictError(
                    f"cannot synthesize travel times: root block {root.id} has no centroid"
                )
            for i, b in enumerate(block_list):
                if b.centroid is None:
                    raise DistrictError(
                        f"cannot synthesize travel times: block {b.id} has no centroid"
                    )
                minutes[i, j] = haversine_minutes(*b.centroid, *root.centroid)
        travel = TravelTimeMatrix(block_ids, school_ids, minutes)
    else:
        if travel.block_ids != block_ids or travel.school_ids != school_ids:
            # Reindex a user-supplied matrix into canonical order.
            bperm = [travel.block_ids.index(bid) for bid in block_ids]
            sperm = [travel.school_ids.index(sid) for sid in school_ids]
            travel = TravelTimeMatrix(
                block_ids, school_ids, travel.minutes[np.ix_(bperm, sperm)]
            )

    n = len(block_list)
    dist = np.full((n, len(school_list)), -1, dtype=np.int32)
    for j, r in enumerate(root_idx):
        dist[:, j] = _bfs_hops(neighbors_idx, int(r), n)
    unreachable = (dist < 0).all(axis=1)
    if unreachable.any():
        bad = block_ids[int(np.argmax(unreachable))]
        raise DistrictError(f"block {bad} cannot reach any school root")

    closer = _closer_index(neighbors_idx, dist)

    # Current-assignment repair: blocks whose current placement violates the
    # closer-neighbor condition are pinned to their current school for all solves.
    pinned: set[int] = set()
    for b in range(n):
        s = int(current_idx[b])
        if dist[b, s] == 0:
            continue  # root block of s is exempt
        if dist[b, s] < 0:
            pinned.add(b)
            continue
        if not any(int(current_idx[v]) == s for v in closer.closer[b][s]):
            pinned.add(b)

    return District(
        blocks=tuple(block_list),
        schools=tuple(school_list),
        counts=counts,
        travel=travel,
        current=Assignment(dict(zip(block_ids, (school_ids[i] for i in current_idx)))),
        closer=closer,
        groups=counts.groups,
        name=name,
        block_ids=block_ids,
        school_ids=school_ids,
        block_index=block_index,
        school_index=school_index,
        neighbors_idx=neighbors_idx,
        root_idx=root_idx,
        current_idx=current_idx,
        pinned=frozenset(pinned),
    )


def with_counts(district: District, counts: CountsMatrix, name: str | None = None) -> District:
    """Same geography and assignment, different counts matrix (e.g. SES groups)."""
    if counts.block_ids != district.block_ids:
        raise DistrictError("replacement counts must use the district's block order")
    return District(
        blocks=district.blocks,
        schools=district.schools,
        counts=counts,
        travel=district.travel,
        current=district.current,
        closer=district.closer,
        groups=counts.groups,
        name=name if name is not None else district.name,
        block_ids=district.block_ids,
        school_ids=district.school_ids,
        block_index=district.block_index,
        school_index=district.school_index,
        neighbors_idx=district.neighbors_idx,
        root_idx=district.root_idx,
        current_idx=district.current_idx,
        pinned=district.pinned,
    )
