"""Synthetic grid districts with a planted demographic gradient.

Gives the solver and experiment harness desk-scale instances with known
structure: rook-adjacency grids, schools spread by farthest-point placement,
a current assignment built from hop-distance Voronoi zones, and group counts
drawn with a west-east gradient so the current assignment shows nonzero
dissimilarity whenever segregation_strength > 0.
"""
from __future__ import annotations

import numpy as np

from .district import (
    RACIAL_GROUPS,
    Assignment,
    Block,
    CountsMatrix,
    District,
    School,
    build_district,
    _bfs_hops,
)
from .ses import BlockGroupVars

# Non-white students are split across the remaining groups in fixed shares.
_NONWHITE_MIX = {"black": 0.55, "hispanic": 0.28, "asian": 0.12, "native": 0.05}

_LAT0, _LON0 = 33.0, -84.4
_CELL_DEG = 0.009  # ~1 km per grid cell


def _grid_ids(rows: int, cols: int) -> list[str]:
    wr, wc = len(str(rows - 1)), len(str(cols - 1))
    return [f"b{r:0{wr}d}x{c:0{wc}d}" for r in range(rows) for c in range(cols)]


def generate_synthetic(
    rows: int,
    cols: int,
    n_schools: int,
    segregation_strength: float,
    mean_block_pop: float,
    seed: int,
) -> District:
    """Deterministic synthetic district on a rows x cols rook-adjacency grid.

    Blocks come in two community types, White-leaning and non-White-leaning,
    like the micro-homogeneous patches of real settlement patterns. The
    probability of the White-leaning type ramps west to east with slope
    segregation_strength, and the types' purity scales with strength too, so
    strength 0 plants no signal at all (every block expects a 50/50 split)
    while strength 1 yields fully one-sided blocks with a 0.025..0.975 type
    gradient. Block totals are Poisson(mean_block_pop); the current assignment
    sends every block to its hop-nearest school (ties to the smallest school
    id), which is contiguity-feasible by construction.
    """
    if rows < 1 or cols < 1:
        raise ValueError("rows and cols must be positive")
    if not (1 <= n_schools <= rows * cols):
        raise ValueError("need 1 <= n_schools <= rows*cols")
    if not (0.0 <= segregation_strength <= 1.0):
        raise ValueError("segregation_strength must be in [0, 1]")
    if mean_block_pop < 1:
        raise ValueError("mean_block_pop must be >= 1")

    n = rows * cols
    ids = _grid_ids(rows, cols)
    wr, wc = len(str(rows - 1)), len(str(cols - 1))

    def at(r: int, c: int) -> int:
        return r * cols + c

    neighbors: list[set[int]] = [set() for _ in range(n)]
    for r in range(rows):
        for c in range(cols):
            i = at(r, c)
            if r + 1 < rows:
                neighbors[i].add(at(r + 1, c))
                neighbors[at(r + 1, c)].add(i)
            if c + 1 < cols:
                neighbors[i].add(at(r, c + 1))
                neighbors[at(r, c + 1)].add(i)
    neighbors_idx = [tuple(sorted(v)) for v in neighbors]

    # Farthest-point school placement on the hop metric, seeded at the grid center.
    roots = [at(rows // 2, cols // 2)]
    mindist = _bfs_hops(neighbors_idx, roots[0], n).astype(np.int64)
    while len(roots) < n_schools:
        best = int(np.argmax(mindist))  # argmax takes the first (smallest id) on ties
        roots.append(best)
        mindist = np.minimum(mindist, _bfs_hops(neighbors_idx, best, n).astype(np.int64))
    ws = len(str(max(n_schools - 1, 1)))
    school_ids = [f"s{k:0{ws}d}" for k in range(n_schools)]

    # Current assignment: hop-distance Voronoi with (distance, school id) ties.
    dist = np.stack(
        [_bfs_hops(neighbors_idx, r, n) for r in roots], axis=1
    )  # (n, n_schools)
    current_idx = np.argmin(dist, axis=1)  # argmin keeps the lowest school index on ties

    rng = np.random.default_rng(seed)
    data = np.zeros((len(RACIAL_GROUPS) + 1, n), dtype=np.int64)
    probs_tail = np.array([_NONWHITE_MIX[g] for g in RACIAL_GROUPS[1:]])
    # Purity saturates before the type gradient does, so mid-strength settings
    # already produce one-sided blocks while the spatial mixing still varies.
    purity = min(1.0, 1.25 * segregation_strength)
    for i in range(n):
        c = i % cols
        x = (c + 0.5) / cols - 0.5  # in (-0.5, 0.5), west to east
        p_white_type = 0.5 + segregation_strength * x
        leans_white = rng.random() < p_white_type
        share_white = 0.5 + 0.5 * purity * (1.0 if leans_white else -1.0)
        total = int(rng.poisson(mean_block_pop))
        p = np.concatenate(([share_white], (1.0 - share_white) * probs_tail))
        split = rng.multinomial(total, p)
        data[:-1, i] = split
        data[-1, i] = total

    blocks = [
        Block(
            id=ids[i],
            block_group_id=f"g{(i // cols) // 2:0{wr}d}x{(i % cols) // 2:0{wc}d}",
            centroid=(_LAT0 + (i // cols) * _CELL_DEG, _LON0 + (i % cols) * _CELL_DEG),
            neighbors=frozenset(ids[v] for v in neighbors_idx[i]),
        )
        for i in range(n)
    ]
    schools = [
        School(id=school_ids[k], name=f"School {k}", root_block_id=ids[roots[k]])
        for k in range(n_schools)
    ]
    counts = CountsMatrix(groups=RACIAL_GROUPS, block_ids=tuple(ids), data=data)
    current = Assignment({ids[i]: school_ids[int(current_idx[i])] for i in range(n)})

    return build_district(
        blocks, schools, counts, current, travel=None,
        name=f"synthetic-{rows}x{cols}-{n_schools}s-seed{seed}",
    )


def synthetic_ses_vars(
    district: District, strength: float, seed: int
) -> list[BlockGroupVars]:
    """Planted block-group SES variables aligned with the district's block groups.

    The gradient runs west-east like the demographic one (via centroid
    longitude), so SES and racial structure correlate, as they tend to in
    real districts.
    """
    groups: dict[str, list[float]] = {}
    for b in district.blocks:
        lon = b.centroid[1] if b.centroid is not None else 0.0
        groups.setdefault(b.block_group_id, []).append(lon)
    lons = {g: float(np.mean(v)) for g, v in groups.items()}
    lo, hi = min(lons.values()), max(lons.values())
    span = (hi - lo) or 1.0

    rng = np.random.default_rng(seed)
    out = []
    for gid in sorted(lons):
        x = (lons[gid] - lo) / span - 0.5  # -0.5 west .. +0.5 east
        base = 0.5 + strength * x
        noise = rng.normal(0.0, 0.05, size=5)
        clip = lambda v: float(min(1.0, max(0.0, v)))
        out.append(
            BlockGroupVars(
                block_group_id=gid,
                pct_dual_parent=clip(base + noise[0]),
                pct_bachelors=clip(base + noise[1]),
                pct_non_english=clip(1.0 - base + noise[2]),
                pct_owner_occupied=clip(base + noise[3]),
                median_family_income=float(max(0.0, 30000 + 90000 * base + 5000 * noise[4])),
            )
        )
    return out
