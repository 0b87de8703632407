from __future__ import annotations

import numpy as np
import pytest

from dp_rezone.district import (
    Assignment,
    Block,
    CountsMatrix,
    District,
    School,
    TravelTimeMatrix,
    build_district,
)


def make_district(
    edges: list[tuple[str, str]],
    schools: dict[str, str],
    counts: dict[str, tuple[int, ...]],
    current: dict[str, str],
    travel: dict[tuple[str, str], float] | None = None,
    groups: tuple[str, ...] = ("white",),
    block_groups: dict[str, str] | None = None,
) -> District:
    """Assemble a small district by hand.

    counts maps block id -> per-group counts followed by the total; travel
    maps (block_id, school_id) -> minutes. When travel is omitted, every pair
    gets 10 minutes so the travel constraint never binds by accident.
    """
    block_ids = sorted({b for e in edges for b in e} | set(counts))
    neighbors: dict[str, set[str]] = {b: set() for b in block_ids}
    for a, b in edges:
        neighbors[a].add(b)
        neighbors[b].add(a)
    blocks = [
        Block(
            id=b,
            block_group_id=(block_groups or {}).get(b, "g0"),
            centroid=None,
            neighbors=frozenset(neighbors[b]),
        )
        for b in block_ids
    ]
    school_objs = [School(id=s, name=s, root_block_id=root) for s, root in schools.items()]
    school_ids = tuple(sorted(schools))
    data = np.array([counts[b] for b in block_ids], dtype=np.int64).T
    cm = CountsMatrix(groups=groups, block_ids=tuple(block_ids), data=data)
    minutes = np.full((len(block_ids), len(school_ids)), 10.0)
    if travel:
        for (b, s), v in travel.items():
            minutes[block_ids.index(b), school_ids.index(s)] = v
    tm = TravelTimeMatrix(tuple(block_ids), school_ids, minutes)
    return build_district(blocks, school_objs, cm, Assignment(current), tm)


@pytest.fixture
def path3() -> District:
    """b1 - b2 - b3 path, one school rooted at b1, everyone assigned to it."""
    return make_district(
        edges=[("b1", "b2"), ("b2", "b3")],
        schools={"s1": "b1"},
        counts={"b1": (4, 10), "b2": (3, 10), "b3": (0, 10)},
        current={"b1": "s1", "b2": "s1", "b3": "s1"},
    )


@pytest.fixture
def two_blocks() -> District:
    """The hand instance from the solver examples: fully split two-block district.

    b1 has 10 white students, b2 has 10 non-white; schools rooted at each
    block; travel chosen so each block's other school costs exactly 1.5x its
    current one.
    """
    return make_district(
        edges=[("b1", "b2")],
        schools={"s1": "b1", "s2": "b2"},
        counts={"b1": (10, 10), "b2": (0, 10)},
        current={"b1": "s1", "b2": "s2"},
        travel={
            ("b1", "s1"): 4.0,
            ("b1", "s2"): 6.0,
            ("b2", "s2"): 4.0,
            ("b2", "s1"): 6.0,
        },
    )
