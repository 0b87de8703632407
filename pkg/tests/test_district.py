from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from dp_rezone.dataio import load_district, load_district_dir, read_assignment_csv, write_district_dir
from dp_rezone.district import DistrictError, closer_neighbors_of, hop_distances
from dp_rezone.metrics import GroupPair, dissimilarity
from dp_rezone.synth import generate_synthetic

from .conftest import make_district


def write_csvs(
    tmp_path: Path,
    blocks: list[str],
    adjacency: list[str],
    schools: list[str],
    assignment: list[str],
) -> dict[str, Path]:
    paths = {}
    for name, lines in (
        ("blocks", blocks),
        ("adjacency", adjacency),
        ("schools", schools),
        ("assignment", assignment),
    ):
        p = tmp_path / f"{name}.csv"
        p.write_text("\n".join(lines) + "\n", encoding="utf-8")
        paths[name] = p
    return paths


BLOCK_HEADER = "block_id,block_group_id,lat,lon,n_white,n_black,n_asian,n_native,n_hispanic,n_total"


def path3_csvs(tmp_path: Path, assignment_rows=None) -> dict[str, Path]:
    return write_csvs(
        tmp_path,
        blocks=[
            BLOCK_HEADER,
            "b1,g1,33.0,-84.0,5,1,0,0,1,7",
            "b2,g1,33.0,-83.99,2,2,0,0,0,5",
            "b3,g2,33.0,-83.98,0,3,1,0,0,4",
        ],
        adjacency=["block_id_a,block_id_b", "b1,b2", "b2,b3"],
        schools=["school_id,name,root_block_id", "s1,First Elementary,b1"],
        assignment=assignment_rows
        or ["block_id,school_id", "b1,s1", "b2,s1", "b3,s1"],
    )


class TestLoadDistrict:
    def test_path_graph_distances(self, tmp_path):
        p = path3_csvs(tmp_path)
        district = load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])
        assert hop_distances(district, "s1") == {"b1": 0, "b2": 1, "b3": 2}

    def test_assignment_not_total(self, tmp_path):
        p = path3_csvs(tmp_path, ["block_id,school_id", "b1,s1", "b2,s1"])
        with pytest.raises(DistrictError, match="assignment not total"):
            load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])

    def test_one_directional_edge_normalizes(self, tmp_path):
        # (b1,b2) listed once still yields a symmetric edge
        p = path3_csvs(tmp_path)
        district = load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])
        b1 = district.blocks[district.block_index["b1"]]
        b2 = district.blocks[district.block_index["b2"]]
        assert "b2" in b1.neighbors and "b1" in b2.neighbors

    def test_duplicate_block_id(self, tmp_path):
        p = path3_csvs(tmp_path)
        p["blocks"].write_text(
            "\n".join(
                [
                    BLOCK_HEADER,
                    "b1,g1,33.0,-84.0,5,1,0,0,1,7",
                    "b1,g1,33.0,-83.99,2,2,0,0,0,5",
                    "b3,g2,33.0,-83.98,0,3,1,0,0,4",
                ]
            )
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(DistrictError, match="duplicate block id"):
            load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])

    def test_negative_count(self, tmp_path):
        p = path3_csvs(tmp_path)
        p["blocks"].write_text(
            "\n".join(
                [
                    BLOCK_HEADER,
                    "b1,g1,33.0,-84.0,-5,1,0,0,1,7",
                    "b2,g1,33.0,-83.99,2,2,0,0,0,5",
                    "b3,g2,33.0,-83.98,0,3,1,0,0,4",
                ]
            )
            + "\n",
            encoding="utf-8",
        )
        with pytest.raises(DistrictError, match="negative count"):
            load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])

    def test_assignment_to_unknown_school(self, tmp_path):
        p = path3_csvs(tmp_path, ["block_id,school_id", "b1,s1", "b2,s1", "b3,s9"])
        with pytest.raises(DistrictError, match="unknown school"):
            load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])

    def test_unreachable_block(self, tmp_path):
        # b3 disconnected from the school root entirely
        p = path3_csvs(tmp_path)
        p["adjacency"].write_text("block_id_a,block_id_b\nb1,b2\n", encoding="utf-8")
        with pytest.raises(DistrictError, match="cannot reach any school root"):
            load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])

    def test_travel_synthesized_from_centroids(self, tmp_path):
        p = path3_csvs(tmp_path)
        district = load_district(p["blocks"], p["adjacency"], p["schools"], p["assignment"])
        # ~0.01 deg of longitude at lat 33 is ~0.93 km; 30 km/h -> ~1.9 min
        t_b2 = district.travel.minutes_for("b2", "s1")
        assert 1.0 < t_b2 < 3.0
        assert district.travel.minutes_for("b1", "s1") == 0.0


class TestGraphIndexes:
    def test_root_distance_zero(self, path3):
        assert hop_distances(path3, "s1")["b1"] == 0

    def test_closer_neighbors_on_path(self, path3):
        assert closer_neighbors_of(path3, "b2", "s1") == {"b1"}
        assert closer_neighbors_of(path3, "b3", "s1") == {"b2"}
        assert closer_neighbors_of(path3, "b1", "s1") == set()

    def test_grid_corner_two_closer_neighbors(self):
        # 2x2 grid, school at one corner: the opposite corner has two closer neighbors
        d = make_district(
            edges=[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
            schools={"s": "a"},
            counts={k: (1, 2) for k in "abcd"},
            current={k: "s" for k in "abcd"},
        )
        assert closer_neighbors_of(d, "d", "s") == {"b", "c"}

    def test_rebuild_closer_neighbors_matches(self, path3):
        from dp_rezone.district import build_closer_neighbors

        rebuilt = build_closer_neighbors(path3)
        assert rebuilt.closer == path3.closer.closer
        assert (rebuilt.dist == path3.closer.dist).all()

    def test_adjacency_symmetric_edge_count(self):
        d = generate_synthetic(5, 4, 2, 0.5, 5, seed=1)
        n_directed = sum(len(b.neighbors) for b in d.blocks)
        # rook grid: undirected edges = r*(c-1) + c*(r-1)
        assert n_directed == 2 * (5 * 3 + 4 * 4)


class TestGenerateSynthetic:
    def test_deterministic(self):
        a = generate_synthetic(6, 5, 3, 0.7, 9, seed=42)
        b = generate_synthetic(6, 5, 3, 0.7, 9, seed=42)
        assert a.current.school_of == b.current.school_of
        assert (a.counts.data == b.counts.data).all()
        assert np.array_equal(a.travel.minutes, b.travel.minutes)

    def test_no_signal_means_even_shares(self):
        d = generate_synthetic(20, 20, 6, 0.0, 200, seed=3)
        di = dissimilarity(d.current, d.counts, GroupPair.white_vs_rest())
        assert di < 0.02

    def test_planted_segregation_regression_fixture(self):
        # frozen: 20x20 grid, 6 schools, strength 0.8 must stay clearly segregated
        d = generate_synthetic(20, 20, 6, 0.8, 8, seed=42)
        di = dissimilarity(d.current, d.counts, GroupPair.white_vs_rest())
        assert di > 0.3
        assert di == pytest.approx(0.336278, abs=1e-6)

    def test_current_assignment_needs_no_pins(self):
        # hop-Voronoi with lexicographic ties is contiguity-feasible by construction
        for seed in (1, 2, 3):
            d = generate_synthetic(8, 8, 4, 0.9, 6, seed=seed)
            assert not d.pinned

    def test_parameter_validation(self):
        with pytest.raises(ValueError):
            generate_synthetic(2, 2, 5, 0.5, 5, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(3, 3, 1, 1.5, 5, seed=0)
        with pytest.raises(ValueError):
            generate_synthetic(3, 3, 1, 0.5, 0.2, seed=0)


class TestRoundTrip:
    def test_write_then_load(self, tmp_path):
        d = generate_synthetic(5, 5, 2, 0.8, 7, seed=9)
        write_district_dir(d, tmp_path / "dist")
        loaded = load_district_dir(tmp_path / "dist")
        assert loaded.block_ids == d.block_ids
        assert loaded.school_ids == d.school_ids
        assert (loaded.counts.data == d.counts.data).all()
        assert loaded.current.school_of == d.current.school_of

    def test_assignment_csv_round_trip(self, tmp_path):
        d = generate_synthetic(4, 4, 2, 0.5, 6, seed=2)
        from dp_rezone.dataio import write_assignment_csv

        write_assignment_csv(tmp_path / "a.csv", d.current)
        back = read_assignment_csv(tmp_path / "a.csv")
        assert back.school_of == dict(d.current.school_of)
