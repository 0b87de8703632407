from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dp_rezone.district import Assignment, CountsMatrix, TravelTimeMatrix
from dp_rezone.metrics import (
    DegenerateDistrictError,
    GroupPair,
    avg_travel_time,
    bootstrap_ci,
    dissimilarity,
    pct_rezoned,
    rezone_frequency,
    rezone_overlap,
)
from dp_rezone.privacy import rng_from_seed

PAIR = GroupPair(focal=frozenset({"w"}), complement=frozenset({"nw"}))


def counts_of(rows: dict[str, tuple[int, int]], privatized=False) -> CountsMatrix:
    """rows: block id -> (w, nw)."""
    bids = tuple(sorted(rows))
    data = np.array(
        [[rows[b][0] for b in bids], [rows[b][1] for b in bids],
         [sum(rows[b]) for b in bids]],
        dtype=np.int64,
    )
    return CountsMatrix(("w", "nw"), bids, data, privatized=privatized)


class TestDissimilarity:
    def test_complete_segregation(self):
        counts = counts_of({"b1": (10, 0), "b2": (0, 10)})
        a = Assignment({"b1": "s1", "b2": "s2"})
        assert dissimilarity(a, counts, PAIR) == 1.0

    def test_perfect_evenness(self):
        counts = counts_of({"b1": (6, 2), "b2": (6, 2), "b3": (3, 1), "b4": (3, 1)})
        a = Assignment({"b1": "s1", "b2": "s2", "b3": "s1", "b4": "s2"})
        assert dissimilarity(a, counts, PAIR) == 0.0

    def test_hand_computed_half(self):
        counts = counts_of({"b1": (30, 10), "b2": (10, 30)})
        a = Assignment({"b1": "s1", "b2": "s2"})
        assert dissimilarity(a, counts, PAIR) == pytest.approx(0.5, abs=1e-12)

    def test_rest_rule_equals_explicit_complement(self):
        rows = {"b1": (3, 5), "b2": (7, 2), "b3": (1, 1)}
        counts = counts_of(rows)
        a = Assignment({"b1": "s1", "b2": "s2", "b3": "s1"})
        implicit = GroupPair(focal=frozenset({"w"}))
        assert dissimilarity(a, counts, implicit) == pytest.approx(
            dissimilarity(a, counts, PAIR), abs=1e-15
        )

    def test_ground_truth_zero_side_raises(self):
        counts = counts_of({"b1": (5, 0), "b2": (3, 0)})
        a = Assignment({"b1": "s1", "b2": "s2"})
        with pytest.raises(DegenerateDistrictError):
            dissimilarity(a, counts, PAIR)

    def test_privatized_zero_side_uses_unit_denominator(self):
        counts = counts_of({"b1": (5, 0), "b2": (3, 0)}, privatized=True)
        a = Assignment({"b1": "s1", "b2": "s2"})
        # focal shares 5/8 and 3/8 vs complement 0/1 twice
        assert dissimilarity(a, counts, PAIR) == pytest.approx(0.5, abs=1e-12)

    @given(st.integers(min_value=1, max_value=11), st.integers(min_value=2, max_value=5))
    @settings(max_examples=40, deadline=None)
    def test_invariances(self, seed, n_schools):
        rng = np.random.default_rng(seed)
        n = 12
        rows = {
            f"b{i:02d}": (int(rng.integers(0, 9)), int(rng.integers(0, 9)))
            for i in range(n)
        }
        rows["b00"] = (rows["b00"][0] + 1, rows["b00"][1] + 1)  # both sides non-empty
        counts = counts_of(rows)
        a = Assignment(
            {b: f"s{rng.integers(0, n_schools)}" for b in rows}
        )
        di = dissimilarity(a, counts, PAIR)
        assert 0.0 <= di <= 1.0
        # relabeling schools
        relabel = {f"s{k}": f"t{n_schools - k}" for k in range(n_schools)}
        a2 = Assignment({b: relabel[s] for b, s in a.items()})
        assert dissimilarity(a2, counts, PAIR) == pytest.approx(di, abs=1e-12)
        # swapping the pair sides
        assert dissimilarity(a, counts, PAIR.swapped()) == pytest.approx(di, abs=1e-12)
        # uniform integer scaling of all counts
        assert dissimilarity(a, counts.scaled(7), PAIR) == pytest.approx(di, abs=1e-12)


class TestTravel:
    def make_travel(self):
        return TravelTimeMatrix(
            ("b1", "b2"), ("s1", "s2"),
            np.array([[5.0, 9.0], [15.0, 4.0]]),
        )

    def test_weighted_mean(self):
        counts = counts_of({"b1": (10, 0), "b2": (30, 0)})
        a = Assignment({"b1": "s1", "b2": "s1"})
        # (10*5 + 30*15) / 40 = 12.5
        assert avg_travel_time(a, self.make_travel(), counts, "w") == pytest.approx(12.5)

    def test_uniform_weights_equal_unweighted_mean(self):
        counts = counts_of({"b1": (5, 1), "b2": (5, 1)})
        a = Assignment({"b1": "s1", "b2": "s2"})  # each to its nearest
        assert avg_travel_time(a, self.make_travel(), counts, "w") == pytest.approx((5 + 4) / 2)

    def test_zero_population_group(self):
        counts = counts_of({"b1": (5, 0), "b2": (5, 0)})
        a = Assignment({"b1": "s1", "b2": "s2"})
        assert avg_travel_time(a, self.make_travel(), counts, "nw") == 0.0

    def test_unknown_group_raises(self):
        counts = counts_of({"b1": (5, 0), "b2": (5, 0)})
        a = Assignment({"b1": "s1", "b2": "s2"})
        with pytest.raises(KeyError):
            avg_travel_time(a, self.make_travel(), counts, "martian")


class TestPctRezoned:
    CUR = Assignment({"b1": "s1", "b2": "s1", "b3": "s2", "b4": "s2"})

    def test_identity_is_zero(self):
        counts = counts_of({b: (3, 2) for b in self.CUR.school_of})
        assert pct_rezoned(self.CUR, self.CUR, counts, "w") == 0.0

    def test_full_rezone_is_one(self):
        counts = counts_of({b: (3, 2) for b in self.CUR.school_of})
        flipped = Assignment({b: ("s2" if s == "s1" else "s1") for b, s in self.CUR.items()})
        assert pct_rezoned(flipped, self.CUR, counts, "w") == 1.0
        assert pct_rezoned(flipped, self.CUR, counts, "nw") == 1.0

    def test_hand_fraction(self):
        counts = counts_of({"b1": (10, 0), "b2": (10, 0), "b3": (10, 0), "b4": (10, 0)})
        moved = Assignment({**dict(self.CUR.school_of), "b1": "s2"})
        assert pct_rezoned(moved, self.CUR, counts, "w") == pytest.approx(0.25)


class TestRezoneOverlap:
    CUR = Assignment({"b1": "s1", "b2": "s1", "b3": "s1", "b4": "s1"})

    def test_identical_plans_coincide(self):
        plan = Assignment({**dict(self.CUR.school_of), "b1": "s2", "b2": "s2"})
        ov = rezone_overlap(plan, plan, self.CUR)
        assert ov.coincide == 1.0 and ov.private_only == 0.0

    def test_half_coincide(self):
        priv = Assignment({**dict(self.CUR.school_of), "b1": "s2", "b2": "s3"})
        nonpriv = Assignment({**dict(self.CUR.school_of), "b1": "s2", "b4": "s3"})
        ov = rezone_overlap(priv, nonpriv, self.CUR)
        assert ov.coincide == pytest.approx(0.5)
        assert ov.private_only == pytest.approx(0.5)
        assert ov.nonprivate_only == pytest.approx(0.5)
        assert ov.n_private_rezoned == 2 and ov.n_nonprivate_rezoned == 2

    def test_empty_private_rezone_is_undefined(self):
        nonpriv = Assignment({**dict(self.CUR.school_of), "b1": "s2"})
        ov = rezone_overlap(self.CUR, nonpriv, self.CUR)
        assert ov.coincide is None and ov.private_only is None
        assert ov.nonprivate_only == 1.0


class TestRezoneFrequency:
    CUR = Assignment({"b1": "s1", "b2": "s1"})

    def test_identity_all_zero(self):
        freq = rezone_frequency([self.CUR], self.CUR)
        assert freq == {"b1": 0.0, "b2": 0.0}

    def test_counting(self):
        moved = Assignment({"b1": "s2", "b2": "s1"})
        freq = rezone_frequency([moved] * 3 + [self.CUR], self.CUR)
        assert freq["b1"] == pytest.approx(0.75)
        assert freq["b2"] == 0.0

    def test_identical_list_binary(self):
        moved = Assignment({"b1": "s2", "b2": "s1"})
        freq = rezone_frequency([moved] * 5, self.CUR)
        assert set(freq.values()) <= {0.0, 1.0}

    def test_empty_list_raises(self):
        with pytest.raises(ValueError):
            rezone_frequency([], self.CUR)


class TestBootstrap:
    def test_constant_samples_degenerate(self):
        lo, hi = bootstrap_ci([3.25] * 40, rng=rng_from_seed(1))
        assert lo == hi == 3.25

    def test_deterministic_given_seed(self):
        samples = list(np.random.default_rng(5).normal(size=30))
        a = bootstrap_ci(samples, rng=rng_from_seed(9))
        b = bootstrap_ci(samples, rng=rng_from_seed(9))
        assert a == b

    def test_width_shrinks_with_sample_size(self):
        small = [0.0, 1.0] * 25
        big = [0.0, 1.0] * 200
        lo_s, hi_s = bootstrap_ci(small, rng=rng_from_seed(2))
        lo_b, hi_b = bootstrap_ci(big, rng=rng_from_seed(3))
        assert lo_s < 0.5 < hi_s
        assert lo_b < 0.5 < hi_b
        assert (hi_b - lo_b) < (hi_s - lo_s)

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            bootstrap_ci([], rng=rng_from_seed(0))
