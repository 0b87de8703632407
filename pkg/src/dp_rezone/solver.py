"""Block-to-school assignment solvers.

Minimizes the dissimilarity index over total assignments subject to four
constraints: one school per block, bounded travel-time increase per block,
bounded school-size increase per school, and contiguity (an assigned block
needs a strictly-closer neighbor assigned to the same school, except the
school's root block). Three entry points:

  check_feasible   independent constraint checker, reports witnesses
  solve_exact      exhaustive search with pruning, proven optimum, small instances
  solve_heuristic  feasibility-preserving simulated annealing from the current plan

Both solvers evaluate the objective on the counts matrix they are handed, so
a privatized matrix yields the private plan; outcome metrics are someone
else's job.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .district import Assignment, CountsMatrix, District
from .metrics import GroupPair, side_counts, side_denominators
from .privacy import mix_seed, rng_from_seed


class InstanceTooLargeError(ValueError):
    """Exact enumeration requested beyond the size cap."""


@dataclass(frozen=True)
class SolveParams:
    alpha_t: float = 0.5
    alpha_p: float = 0.15
    pair: GroupPair = field(default_factory=GroupPair.white_vs_rest)
    mode: str = "heuristic"  # heuristic | exact
    max_iters: int | None = None  # default 200 * n_blocks
    restarts: int = 8
    initial_temp: float = 0.05
    cooling: float = 0.995
    seed: int = 0
    exact_size_cap: int = 12

    def __post_init__(self) -> None:
        if self.alpha_t < 0 or self.alpha_p < 0:
            raise ValueError("alpha_t and alpha_p must be non-negative")
        if self.mode not in ("heuristic", "exact"):
            raise ValueError(f"unknown solver mode {self.mode!r}")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


@dataclass(frozen=True)
class Violation:
    constraint: str  # totality | travel | size | contiguity
    block_id: str | None
    school_id: str | None
    detail: str


@dataclass(frozen=True)
class FeasibilityReport:
    totality: tuple[Violation, ...]
    travel: tuple[Violation, ...]
    size: tuple[Violation, ...]
    contiguity: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not (self.totality or self.travel or self.size or self.contiguity)

    def all_violations(self) -> tuple[Violation, ...]:
        return self.totality + self.travel + self.size + self.contiguity


@dataclass(frozen=True)
class SolveResult:
    assignment: Assignment
    objective: float  # dissimilarity on the counts the solver was given
    objective_exact: Fraction
    iterations: int  # heuristic move proposals, or nodes explored in exact mode
    wall_time: float
    proven_optimal: bool
    mode: str


def candidate_schools(district: District, block_id: str, params: SolveParams) -> frozenset[str]:
    """Schools reachable within the travel budget; always includes the current school."""
    b = district.block_index[block_id]
    cur = int(district.current_idx[b])
    budget = (1.0 + params.alpha_t) * district.travel.minutes[b, cur]
    out = {
        district.school_ids[s]
        for s in range(district.n_schools)
        if district.travel.minutes[b, s] <= budget
    }
    out.add(district.school_ids[cur])
    return frozenset(out)


def check_feasible(
    district: District,
    assignment: Assignment,
    params: SolveParams,
    counts: CountsMatrix | None = None,
) -> FeasibilityReport:
    """Verify all four constraints, reporting witnesses instead of raising.

    School sizes are checked against the same counts matrix the solver was
    given (defaults to ground truth). Pinned blocks satisfy contiguity by
    definition; the root block of a school is exempt for that school.
    """
    if counts is None:
        counts = district.counts
    totality: list[Violation] = []
    travel: list[Violation] = []
    size: list[Violation] = []
    contiguity: list[Violation] = []

    for bid in assignment.school_of:
        if bid not in district.block_index:
            totality.append(
                Violation("totality", bid, None, "assignment covers unknown block")
            )
    missing = [bid for bid in district.block_ids if bid not in assignment.school_of]
    for bid in missing:
        totality.append(Violation("totality", bid, None, "block has no assigned school"))
    for bid, sid in assignment.items():
        if bid in district.block_index and sid not in district.school_index:
            totality.append(Violation("totality", bid, sid, "unknown school"))
    if totality:
        return FeasibilityReport(tuple(totality), (), (), ())

    totals = counts.totals
    minutes = district.travel.minutes
    dist = district.closer.dist
    assigned_pop = np.zeros(district.n_schools, dtype=np.int64)
    current_pop = np.zeros(district.n_schools, dtype=np.int64)
    assign_idx = assignment.to_indices(district)

    for b in range(district.n_blocks):
        s = int(assign_idx[b])
        cur = int(district.current_idx[b])
        assigned_pop[s] += totals[b]
        current_pop[cur] += totals[b]

        limit = (1.0 + params.alpha_t) * minutes[b, cur]
        if minutes[b, s] > limit:
            travel.append(
                Violation(
                    "travel",
                    district.block_ids[b],
                    district.school_ids[s],
                    f"travel {minutes[b, s]:.3f} min exceeds budget {limit:.3f} min",
                )
            )

        if b in district.pinned:
            continue  # repaired blocks satisfy contiguity by definition
        if dist[b, s] == 0:
            continue  # root block of s
        if not any(int(assign_idx[v]) == s for v in district.closer.closer[b][s]):
            contiguity.append(
                Violation(
                    "contiguity",
                    district.block_ids[b],
                    district.school_ids[s],
                    "no strictly-closer neighbor assigned to the same school",
                )
            )

    for s in range(district.n_schools):
        cap = (1.0 + params.alpha_p) * current_pop[s]
        if assigned_pop[s] > cap:
            size.append(
                Violation(
                    "size",
                    None,
                    district.school_ids[s],
                    f"population {int(assigned_pop[s])} exceeds cap {cap:.2f}",
                )
            )

    return FeasibilityReport((), tuple(travel), tuple(size), tuple(contiguity))


class _Instance:
    """Precomputed solver state for one (district, counts, params) triple."""

    def __init__(self, district: District, counts: CountsMatrix, params: SolveParams):
        if counts.block_ids != district.block_ids:
            raise ValueError("counts matrix block order does not match the district")
        self.district = district
        self.params = params
        n, S = district.n_blocks, district.n_schools

        focal, comp = side_counts(counts, params.pair)
        self.dw, self.dc = side_denominators(counts, focal, comp)
        self.focal = [int(x) for x in focal]
        self.comp = [int(x) for x in comp]
        self.pop = [int(x) for x in counts.totals]

        current = [int(x) for x in district.current_idx]
        self.current = current
        current_pop = [0] * S
        for b in range(n):
            current_pop[current[b]] += self.pop[b]
        self.caps = [(1.0 + params.alpha_p) * p for p in current_pop]

        minutes = district.travel.minutes
        self.cand: list[tuple[int, ...]] = []
        for b in range(n):
            if b in district.pinned:
                self.cand.append((current[b],))
                continue
            budget = (1.0 + params.alpha_t) * minutes[b, current[b]]
            cs = [s for s in range(S) if minutes[b, s] <= budget]
            if current[b] not in cs:
                cs.append(current[b])
                cs.sort()
            self.cand.append(tuple(cs))

        self.dist = district.closer.dist.tolist()
        self.closer = [
            [tuple(c) for c in district.closer.closer[b]] for b in range(n)
        ]
        self.neighbors = district.neighbors_idx
        self.pinned = set(district.pinned)

    def objective_int(self, assign: list[int]) -> int:
        """Integer objective T with DI = T / (2 * dw * dc); exact for tie purposes."""
        S = self.district.n_schools
        f = [0] * S
        c = [0] * S
        for b, s in enumerate(assign):
            f[s] += self.focal[b]
            c[s] += self.comp[b]
        return sum(abs(f[s] * self.dc - c[s] * self.dw) for s in range(S))

    def di_fraction(self, T: int) -> Fraction:
        return Fraction(T, 2 * self.dw * self.dc)

    def contiguity_ok(self, assign: list[int], b: int) -> bool:
        s = assign[b]
        if b in self.pinned:
            return True
        if self.dist[b][s] == 0:
            return True
        for v in self.closer[b][s]:
            if assign[v] == s:
                return True
        return False


def solve_exact(district: District, counts: CountsMatrix, params: SolveParams) -> SolveResult:
    """Depth-first enumeration with pruning; returns the proven optimum.

    Blocks are processed in id order with school choices ascending, so the
    first assignment attaining the best objective is the lexicographically
    smallest minimizer. Travel filtering and school-size bounds prune during
    descent; contiguity prunes only when provably dead and is re-verified on
    complete assignments because it is not monotone under extension.
    """
    n = district.n_blocks
    if n > params.exact_size_cap:
        raise InstanceTooLargeError(
            f"{n} blocks exceeds exact_size_cap={params.exact_size_cap}"
        )
    inst = _Instance(district, counts, params)
    S = district.n_schools
    t0 = time.perf_counter()

    assign = [-1] * n
    f = [0] * S
    c = [0] * S
    pop_s = [0] * S
    best_T: int | None = None
    best_vec: list[int] | None = None
    nodes = 0

    def dfs(i: int) -> None:
        nonlocal best_T, best_vec, nodes
        if i == n:
            if all(inst.contiguity_ok(assign, b) for b in range(n)):
                T = sum(abs(f[s] * inst.dc - c[s] * inst.dw) for s in range(S))
                if best_T is None or T < best_T:
                    best_T = T
                    best_vec = assign[:]
            return
        pop_i = inst.pop[i]
        for s in inst.cand[i]:
            if pop_s[s] + pop_i > inst.caps[s]:
                continue
            if i not in inst.pinned and inst.dist[i][s] != 0:
                members = inst.closer[i][s]
                if all(m < i for m in members) and not any(assign[m] == s for m in members):
                    continue  # provably dead: every closer neighbor already decided away
            assign[i] = s
            f[s] += inst.focal[i]
            c[s] += inst.comp[i]
            pop_s[s] += pop_i
            nodes += 1
            dfs(i + 1)
            assign[i] = -1
            f[s] -= inst.focal[i]
            c[s] -= inst.comp[i]
            pop_s[s] -= pop_i

    dfs(0)
    if best_vec is None:
        raise RuntimeError(
            "no feasible assignment found; the current assignment should always be "
            "feasible after repair, so this indicates inconsistent inputs"
        )
    exact = inst.di_fraction(best_T)
    return SolveResult(
        assignment=Assignment.from_indices(district, best_vec),
        objective=float(exact),
        objective_exact=exact,
        iterations=nodes,
        wall_time=time.perf_counter() - t0,
        proven_optimal=True,
        mode="exact",
    )


def solve_heuristic(district: District, counts: CountsMatrix, params: SolveParams) -> SolveResult:
    """Feasibility-preserving simulated annealing from the (repaired) current plan.

    Every visited state satisfies all four constraints: a move reassigns one
    block to a school that keeps travel, size, and its own contiguity intact,
    and is rejected if any neighbor relying on the moved block would lose its
    last closer same-school neighbor. Geometric cooling, independent restarts,
    and a deterministic first-improvement descent that finishes each restart's
    incumbent at a strict local optimum. Deterministic given the seed.
    """
    inst = _Instance(district, counts, params)
    n, S = district.n_blocks, district.n_schools
    t0 = time.perf_counter()
    max_iters = params.max_iters if params.max_iters is not None else 200 * n

    pool = [b for b in range(n) if b not in inst.pinned and len(inst.cand[b]) > 1]
    inv_dw, inv_dc = 1.0 / inst.dw, 1.0 / inst.dc
    focal, comp, pop = inst.focal, inst.comp, inst.pop
    cand, closer, neighbors = inst.cand, inst.closer, inst.neighbors
    dist, caps, pinned = inst.dist, inst.caps, inst.pinned

    # State shared by the annealing loop and the descent sweeps.
    assign = inst.current[:]
    f = [0] * S
    c = [0] * S
    pop_s = [0] * S

    def load_state(vec: list[int]) -> float:
        nonlocal assign
        assign = vec[:]
        for s in range(S):
            f[s] = 0
            c[s] = 0
            pop_s[s] = 0
        for b in range(n):
            s = assign[b]
            f[s] += focal[b]
            c[s] += comp[b]
            pop_s[s] += pop[b]
        return 0.5 * sum(abs(f[s] * inv_dw - c[s] * inv_dc) for s in range(S))

    def move_ok(b: int, s_old: int, s_new: int) -> bool:
        if pop_s[s_new] + pop[b] > caps[s_new]:
            return False
        if dist[b][s_new] != 0:
            for v in closer[b][s_new]:
                if assign[v] == s_new:
                    break
            else:
                return False
        for j in neighbors[b]:
            if assign[j] == s_old and j not in pinned:
                cj = closer[j][s_old]
                if b in cj:
                    for k in cj:
                        if k != b and assign[k] == s_old:
                            break
                    else:
                        return False
        return True

    def move_delta(b: int, s_old: int, s_new: int) -> float:
        fb, cb = focal[b], comp[b]
        fo, co = f[s_old], c[s_old]
        fn, cn = f[s_new], c[s_new]
        return 0.5 * (
            abs((fo - fb) * inv_dw - (co - cb) * inv_dc)
            + abs((fn + fb) * inv_dw - (cn + cb) * inv_dc)
            - abs(fo * inv_dw - co * inv_dc)
            - abs(fn * inv_dw - cn * inv_dc)
        )

    def apply_move(b: int, s_old: int, s_new: int) -> None:
        assign[b] = s_new
        f[s_old] -= focal[b]
        c[s_old] -= comp[b]
        pop_s[s_old] -= pop[b]
        f[s_new] += focal[b]
        c[s_new] += comp[b]
        pop_s[s_new] += pop[b]

    def descend() -> None:
        """First-improvement sweeps in block/school order until a fixpoint."""
        improved = True
        while improved:
            improved = False
            for b in pool:
                s_old = assign[b]
                for s_new in cand[b]:
                    if s_new == s_old:
                        continue
                    if move_delta(b, s_old, s_new) < -1e-12 and move_ok(b, s_old, s_new):
                        apply_move(b, s_old, s_new)
                        s_old = s_new
                        improved = True

    overall_T: int | None = None
    overall_vec: list[int] | None = None
    total_iters = 0

    for restart in range(params.restarts):
        if not pool:
            break
        rng = rng_from_seed(mix_seed(params.seed, restart))
        cur_obj = load_state(inst.current)
        best_obj = cur_obj
        best_vec = assign[:]
        temp = params.initial_temp
        npool = len(pool)

        for _ in range(max_iters):
            total_iters += 1
            temp *= params.cooling
            b = pool[int(rng.integers(npool))]
            cb = cand[b]
            s_new = cb[int(rng.integers(len(cb)))]
            s_old = assign[b]
            if s_new == s_old:
                continue
            delta = move_delta(b, s_old, s_new)
            if delta > 0:
                if temp <= 1e-12 or delta / temp > 60.0:
                    continue
                if rng.random() >= math.exp(-delta / temp):
                    continue
            if not move_ok(b, s_old, s_new):
                continue
            apply_move(b, s_old, s_new)
            cur_obj += delta
            if cur_obj < best_obj - 1e-12:
                best_obj = cur_obj
                best_vec = assign[:]

        # Finish the incumbent at a strict local optimum, deterministically.
        load_state(best_vec)
        descend()
        best_vec = assign[:]

        T = inst.objective_int(best_vec)
        if (
            overall_T is None
            or T < overall_T
            or (T == overall_T and best_vec < overall_vec)
        ):
            overall_T = T
            overall_vec = best_vec

    if overall_vec is None:  # no movable block at all: the current plan stands
        overall_vec = inst.current[:]
        overall_T = inst.objective_int(overall_vec)

    exact = inst.di_fraction(overall_T)
    return SolveResult(
        assignment=Assignment.from_indices(district, overall_vec),
        objective=float(exact),
        objective_exact=exact,
        iterations=total_iters,
        wall_time=time.perf_counter() - t0,
        proven_optimal=False,
        mode="heuristic",
    )


def solve(district: District, counts: CountsMatrix, params: SolveParams) -> SolveResult:
    """Dispatch on params.mode."""
    if params.mode == "exact":
        return solve_exact(district, counts, params)
    return solve_heuristic(district, counts, params)
