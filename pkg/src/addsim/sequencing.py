"""Retrieval-plan solvers for both rack layouts.

Cost convention (executed routes): an order with R routed lines is served
by exactly R dual-command cycles. Cycle c returns the bin currently
waiting at its I/O point (a trailing bin from the prior order, or the bin
this order retrieved two cycles earlier at the same point; nothing at the
start of a busy period) and retrieves the bin chosen for line c. The bins
retrieved last stay at the I/O points and are returned during the next
order. Under the two-I/O layout (A) cycles strictly alternate points,
starting at the point holding the older trailing bin; each cycle costs
E[max(X, travel)]. Under the one-I/O layout (B) every cycle costs
travel + E[X].

solve_optimal searches all line orders and bin choices with a subset
dynamic program whose state is (set of served lines, bins retrieved in the
last two cycles) for layout A and (set, last bin) for layout B; it is
exact, and brute_force_oracle provides the independent enumeration check.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .catalog import SequencingInstance, TrailingState
from .geometry import RackConfig
from .stochastics import SortingModel, expected_max_array


class SizeError(ValueError):
    """Instance too large for exhaustive enumeration."""


@dataclass(frozen=True)
class Cycle:
    io_point: int                # 1-based index into rack.io_points
    return_bin: str | None       # bin returned to storage first, if any
    retrieve_bin: str | None     # bin brought to the I/O point, if any
    travel_time: float
    expected_time: float


@dataclass(frozen=True)
class RetrievalPlan:
    layout: str
    cycles: tuple[Cycle, ...]
    sorted_in_place: tuple[str, ...]   # drug ids satisfied from trailing bins
    objective: float                   # model objective (executed-route convention)
    executed_expected_time: float      # what the simulator charges; equals objective
    new_trailing: TrailingState


# ---------------------------------------------------------------------------
# Solve context: node indexing and cost matrices
# ---------------------------------------------------------------------------

class _Ctx:
    """Precomputed geometry/cost tables for one instance."""

    def __init__(self, instance: SequencingInstance, rack: RackConfig,
                 sorting: SortingModel):
        self.instance = instance
        self.rack = rack
        self.sorting = sorting
        self.layout = instance.layout
        self.n_points = 2 if self.layout == "A" else 1
        if len(rack.io_points) < self.n_points:
            raise ValueError(f"layout {self.layout} needs {self.n_points} I/O point(s), "
                             f"rack has {len(rack.io_points)}")

        self.routed = list(instance.routed_lines)   # [(drug, dosage)]

        # Node universe: one node per I/O point, then trailing bins, then
        # candidate bins sorted by id (argmin-first scans then prefer low ids).
        positions = [rack.io_points[p] for p in range(self.n_points)]
        self.node_bin = [None] * self.n_points      # bin id per node, None for I/O
        self.node_drug = [None] * self.n_points
        self.idx_of_bin: dict[str, int] = {}

        def add_bin(b):
            self.idx_of_bin[b.id] = len(positions)
            positions.append(b.position)
            self.node_bin.append(b.id)
            self.node_drug.append(b.drug)

        for _, bin_id in instance.trailing.entries:
            add_bin(instance.bins[bin_id])
        cand_ids = sorted({b.id for d, _ in self.routed
                           for b in instance.candidate_sets[d]})
        for bid in cand_ids:
            if bid not in self.idx_of_bin:
                add_bin(instance.bins[bid])

        self.n = len(positions)
        rowcol = np.array([[p.row, p.col] for p in positions], dtype=float)
        dr = np.abs(rowcol[:, 0:1] - rowcol[:, 0:1].T) * rack.cell_height
        dc = np.abs(rowcol[:, 1:2] - rowcol[:, 1:2].T) * rack.cell_length
        legs = np.maximum(dr, dc) / rack.speed      # pairwise leg times

        # T[p], C[p]: travel and expected cycle time anchored at I/O point p.
        self.T = {}
        self.C = {}
        for p in range(1, self.n_points + 1):
            out = legs[p - 1]                       # leg from O_p to each node
            t = out[:, None] + legs + out[None, :]
            self.T[p] = t
            if self.layout == "A":
                self.C[p] = expected_max_array(sorting, t)
            else:
                self.C[p] = t + sorting.mu

        # Candidate node indices per routed line, ascending (= bin-id order).
        self.cand_idx = [
            sorted(self.idx_of_bin[b.id] for b in instance.candidate_sets[d])
            for d, _ in self.routed
        ]

        # Cycle c (0-based) happens at I/O point point_of(c); strict alternation
        # starting at the point holding the oldest trailing bin.
        if instance.trailing.entries:
            self.start_point = instance.trailing.entries[0][0]
        else:
            self.start_point = 1

        # Return anchor for the first cycle at each point.
        self.anchor_idx = {}
        self.anchor_bin = {}
        for p in range(1, self.n_points + 1):
            tb = instance.trailing.bin_at(p)
            self.anchor_idx[p] = self.idx_of_bin[tb] if tb else p - 1
            self.anchor_bin[p] = tb

    def point_of(self, c: int) -> int:
        if self.layout == "B":
            return 1
        return self.start_point if c % 2 == 0 else 3 - self.start_point

    def init_state(self) -> tuple[int, int]:
        """(return anchor of cycle 1, return anchor of cycle 2) as node indices."""
        a1 = self.anchor_idx[self.point_of(0)]
        a2 = self.anchor_idx[self.point_of(1)] if self.n_points == 2 else a1
        return a1, a2

    def sequence_cost(self, seq) -> float:
        """Cost of a full sequence of (line_index, node_index) choices."""
        u, v = self.init_state()
        total = 0.0
        for c, (_, j) in enumerate(seq):
            ret = v if self.layout == "B" else u   # layout B returns the last bin
            total += self.C[self.point_of(c)][ret, j]
            u, v = v, j
        return total


def _build_plan(ctx: _Ctx, seq) -> RetrievalPlan:
    """Assemble the RetrievalPlan for a sequence of (line_index, node_index)."""
    inst = ctx.instance
    pending: dict[int, str | None] = {}
    pending_idx: dict[int, int] = {}
    age: dict[int, int] = {}
    for p in range(1, ctx.n_points + 1):
        pending[p] = ctx.anchor_bin[p]
        pending_idx[p] = ctx.anchor_idx[p]
    for rank, (io_point, bin_id) in enumerate(inst.trailing.entries):
        age[io_point] = rank - len(inst.trailing.entries)

    cycles = []
    for c, (_, j) in enumerate(seq):
        p = ctx.point_of(c)
        a = pending_idx[p]
        cycles.append(Cycle(io_point=p,
                            return_bin=pending[p],
                            retrieve_bin=ctx.node_bin[j],
                            travel_time=float(ctx.T[p][a, j]),
                            expected_time=float(ctx.C[p][a, j])))
        pending[p] = ctx.node_bin[j]
        pending_idx[p] = j
        age[p] = c

    entries = [(p, pending[p]) for p in sorted(age, key=age.get)
               if pending[p] is not None]
    objective = sum(c.expected_time for c in cycles)
    in_place = tuple(d for d, _ in inst.order.lines if d in inst.overlap_flags)
    return RetrievalPlan(layout=inst.layout, cycles=tuple(cycles),
                         sorted_in_place=in_place, objective=objective,
                         executed_expected_time=objective,
                         new_trailing=TrailingState(tuple(entries)))


# ---------------------------------------------------------------------------
# Exact solver: subset dynamic programming
# ---------------------------------------------------------------------------

def _dp_layout_a(ctx: _Ctx, masks_chain=None):
    """Subset DP, state (mask, u, v): u/v are the bins retrieved two/one
    cycles ago (return anchors for the next two cycles). masks_chain
    restricts the search to a fixed line order (prefix masks) when given."""
    R = len(ctx.routed)
    n = ctx.n
    a1, a2 = ctx.init_state()
    INF = np.inf
    cost = {0: np.full((n, n), INF)}
    cost[0][a1, a2] = 0.0
    full = (1 << R) - 1

    if masks_chain is None:
        order = sorted(range(1 << R), key=lambda m: m.bit_count())
        successors = lambda m: [k for k in range(R) if not m >> k & 1]
    else:
        order = masks_chain[:-1]
        nxt = {masks_chain[i]: masks_chain[i + 1] for i in range(len(masks_chain) - 1)}
        successors = lambda m: [int(nxt[m] ^ m).bit_length() - 1]

    for mask in order:
        cur = cost.get(mask)
        if cur is None or not np.isfinite(cur).any():
            continue
        c = mask.bit_count()
        Cp = ctx.C[ctx.point_of(c)]
        for k in successors(mask):
            J = ctx.cand_idx[k]
            # new[v, j] = min_u cur[u, v] + Cp[u, j]
            contrib = (cur[:, :, None] + Cp[:, None, J]).min(axis=0)  # (n, |J|)
            nxt_cost = cost.setdefault(mask | 1 << k,
                                       np.full((n, n), INF))
            nxt_cost[:, J] = np.minimum(nxt_cost[:, J], contrib)

    final = cost[full]
    u_star, v_star = np.unravel_index(int(np.argmin(final)), final.shape)
    best = float(final[u_star, v_star])
    if not math.isfinite(best):
        raise RuntimeError("no feasible sequence found")

    # Backtrack deterministically (first match in node-index order).
    drug_of_node = {}
    for k, J in enumerate(ctx.cand_idx):
        for j in J:
            drug_of_node[j] = k
    seq = []
    mask, u, v = full, int(u_star), int(v_star)
    value = best
    while mask:
        k = drug_of_node[v]
        prev = mask ^ 1 << k
        Cp = ctx.C[ctx.point_of(prev.bit_count())]
        cands = cost[prev][:, u] + Cp[:, v]
        up = int(np.argmin(np.where(np.isfinite(cands), np.abs(cands - value), np.inf)))
        if abs(cands[up] - value) > 1e-6 * max(1.0, abs(value)):
            raise RuntimeError("backtracking lost the optimal sequence")
        seq.append((k, v))
        value = float(cost[prev][up, u])
        mask, u, v = prev, up, u
    seq.reverse()
    return seq, best


def _dp_layout_b(ctx: _Ctx, masks_chain=None):
    """Subset DP, state (mask, last retrieved bin)."""
    R = len(ctx.routed)
    n = ctx.n
    a1, _ = ctx.init_state()
    INF = np.inf
    cost = {0: np.full(n, INF)}
    cost[0][a1] = 0.0
    full = (1 << R) - 1
    C1 = ctx.C[1]

    if masks_chain is None:
        order = sorted(range(1 << R), key=lambda m: m.bit_count())
        successors = lambda m: [k for k in range(R) if not m >> k & 1]
    else:
        order = masks_chain[:-1]
        nxt = {masks_chain[i]: masks_chain[i + 1] for i in range(len(masks_chain) - 1)}
        successors = lambda m: [int(nxt[m] ^ m).bit_length() - 1]

    for mask in order:
        cur = cost.get(mask)
        if cur is None or not np.isfinite(cur).any():
            continue
        for k in successors(mask):
            J = ctx.cand_idx[k]
            contrib = (cur[:, None] + C1[:, J]).min(axis=0)
            nxt_cost = cost.setdefault(mask | 1 << k, np.full(n, INF))
            nxt_cost[J] = np.minimum(nxt_cost[J], contrib)

    final = cost[full]
    v_star = int(np.argmin(final))
    best = float(final[v_star])
    if not math.isfinite(best):
        raise RuntimeError("no feasible sequence found")

    drug_of_node = {}
    for k, J in enumerate(ctx.cand_idx):
        for j in J:
            drug_of_node[j] = k
    seq = []
    mask, v, value = full, v_star, best
    while mask:
        k = drug_of_node[v]
        prev = mask ^ 1 << k
        cands = cost[prev] + C1[:, v]
        up = int(np.argmin(np.where(np.isfinite(cands), np.abs(cands - value), np.inf)))
        if abs(cands[up] - value) > 1e-6 * max(1.0, abs(value)):
            raise RuntimeError("backtracking lost the optimal sequence")
        seq.append((k, v))
        value = float(cost[prev][up])
        mask, v = prev, up
    seq.reverse()
    return seq, best


def _prefix_masks(R: int) -> list[int]:
    """Masks for the fixed prescription order: {}, {0}, {0,1}, ..."""
    return [(1 << i) - 1 for i in range(R + 1)]


def _empty_plan(ctx: _Ctx) -> RetrievalPlan:
    return _build_plan(ctx, [])


def solve_optimal(instance: SequencingInstance, rack: RackConfig,
                  sorting: SortingModel) -> RetrievalPlan:
    """Exact optimum over all line orders and bin choices."""
    ctx = _Ctx(instance, rack, sorting)
    if not ctx.routed:
        return _empty_plan(ctx)
    seq, _ = (_dp_layout_a(ctx) if ctx.layout == "A" else _dp_layout_b(ctx))
    return _build_plan(ctx, seq)


def solve_dp(instance: SequencingInstance, rack: RackConfig,
             sorting: SortingModel) -> RetrievalPlan:
    """Line order fixed to the prescription; bin choices optimized exactly."""
    ctx = _Ctx(instance, rack, sorting)
    if not ctx.routed:
        return _empty_plan(ctx)
    chain = _prefix_masks(len(ctx.routed))
    seq, _ = (_dp_layout_a(ctx, chain) if ctx.layout == "A"
              else _dp_layout_b(ctx, chain))
    return _build_plan(ctx, seq)


def solve_greedy(instance: SequencingInstance, rack: RackConfig,
                 sorting: SortingModel) -> RetrievalPlan:
    """Fixed line order; each stage takes the bin with the cheapest added
    cycle, ties broken by lowest bin id."""
    ctx = _Ctx(instance, rack, sorting)
    u, v = ctx.init_state()
    seq = []
    for c, J in enumerate(ctx.cand_idx):
        Cp = ctx.C[ctx.point_of(c)]
        best_j = min(J, key=lambda j: (Cp[u, j], ctx.node_bin[j]))
        seq.append((c, best_j))
        u, v = v, best_j
    return _build_plan(ctx, seq)


def solve_random(instance: SequencingInstance, rack: RackConfig,
                 sorting: SortingModel, seed) -> RetrievalPlan:
    """Fixed line order; uniform bin choice per stage, deterministic per seed."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    ctx = _Ctx(instance, rack, sorting)
    seq = [(c, J[int(rng.integers(len(J)))]) for c, J in enumerate(ctx.cand_idx)]
    return _build_plan(ctx, seq)


def brute_force_oracle(instance: SequencingInstance, rack: RackConfig,
                       sorting: SortingModel, cap: int = 2_000_000) -> float:
    """Exhaustive minimum over all line permutations and bin selections."""
    ctx = _Ctx(instance, rack, sorting)
    R = len(ctx.routed)
    if R == 0:
        return 0.0
    combos = math.prod(len(J) for J in ctx.cand_idx)
    if combos * math.factorial(R) > cap:
        raise SizeError(f"{combos} bin selections x {R}! permutations exceeds cap {cap}")
    best = math.inf
    for perm in itertools.permutations(range(R)):
        for choice in itertools.product(*(ctx.cand_idx[k] for k in perm)):
            total = ctx.sequence_cost(list(zip(perm, choice)))
            if total < best:
                best = total
    return best


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_plan(plan: RetrievalPlan, instance: SequencingInstance,
                  rack: RackConfig, sorting: SortingModel) -> ValidationReport:
    """Structural and numerical checks of a plan against its instance.

    Violations are reported, never raised.
    """
    v: list[str] = []
    ctx = _Ctx(instance, rack, sorting)
    dosage = dict(instance.order.lines)
    drug_of = {bid: b.drug for bid, b in instance.bins.items()}

    # Coverage: every line exactly once, routed from its candidate set or in place.
    retrieved: dict[str, str] = {}
    for c in plan.cycles:
        if c.retrieve_bin is None:
            continue
        d = drug_of.get(c.retrieve_bin)
        if d is None:
            v.append(f"retrieved unknown bin {c.retrieve_bin}")
            continue
        if d in retrieved:
            v.append(f"drug {d} picked twice (intra-set repeat)")
        retrieved[d] = c.retrieve_bin
    for d, q in instance.order.lines:
        in_place = d in plan.sorted_in_place
        routed = d in retrieved
        if in_place and routed:
            v.append(f"drug {d} both sorted in place and retrieved")
        elif not in_place and not routed:
            v.append(f"drug {d} not satisfied by the plan")
        if in_place and d not in instance.overlap_flags:
            v.append(f"drug {d} marked in-place without a matching trailing bin")
        if routed:
            cands = {b.id for b in instance.candidate_sets[d]}
            if retrieved[d] not in cands:
                v.append(f"drug {d} retrieved from {retrieved[d]} outside its candidate set")
    for d in instance.overlap_flags:
        if d not in plan.sorted_in_place:
            v.append(f"overlap drug {d} not marked sorted in place")

    # Each location visited at most once.
    rbins = [c.retrieve_bin for c in plan.cycles if c.retrieve_bin]
    if len(rbins) != len(set(rbins)):
        v.append("a bin is retrieved more than once")
    retbins = [c.return_bin for c in plan.cycles if c.return_bin]
    if len(retbins) != len(set(retbins)):
        v.append("a bin is returned more than once")

    # Stock sufficiency.
    for d, bid in retrieved.items():
        b = instance.bins.get(bid)
        if b is not None and b.stock < dosage[d]:
            v.append(f"bin {bid} stock {b.stock} below dosage {dosage[d]} of drug {d}")

    # No cycle may return and retrieve bins of the same drug set.
    for c in plan.cycles:
        if c.return_bin and c.retrieve_bin:
            if drug_of.get(c.return_bin) == drug_of.get(c.retrieve_bin):
                v.append(f"cycle returns and retrieves drug "
                         f"{drug_of.get(c.return_bin)} bins (intra-set arc)")

    # Alternation and trailing-first returns.
    expected_points = [ctx.point_of(c) for c in range(len(plan.cycles))]
    actual_points = [c.io_point for c in plan.cycles]
    if actual_points != expected_points:
        v.append(f"I/O point sequence {actual_points} breaks strict alternation "
                 f"{expected_points}")
    first_return_seen: set[int] = set()
    for c in plan.cycles:
        if c.io_point not in first_return_seen:
            first_return_seen.add(c.io_point)
            expected_ret = instance.trailing.bin_at(c.io_point)
            if c.return_bin != expected_ret:
                v.append(f"first cycle at point {c.io_point} returns "
                         f"{c.return_bin}, expected trailing bin {expected_ret}")

    # Cycle count: one executed cycle per routed line.
    expected_cycles = len(instance.routed_lines)
    if len(plan.cycles) != expected_cycles:
        v.append(f"{len(plan.cycles)} cycles, expected {expected_cycles} "
                 f"(lines minus overlaps)")

    # Recompute travel and expected times, and the objective.
    recomputed = 0.0
    pending_idx = {p: ctx.anchor_idx[p] for p in range(1, ctx.n_points + 1)}
    consistent = True
    for i, c in enumerate(plan.cycles):
        p = c.io_point
        if p not in pending_idx or c.retrieve_bin not in ctx.idx_of_bin:
            consistent = False
            break
        a = pending_idx[p]
        j = ctx.idx_of_bin[c.retrieve_bin]
        t = float(ctx.T[p][a, j])
        e = float(ctx.C[p][a, j])
        if abs(t - c.travel_time) > 1e-9:
            v.append(f"cycle {i}: stored travel {c.travel_time:.9f} != recomputed {t:.9f}")
        if abs(e - c.expected_time) > 1e-9:
            v.append(f"cycle {i}: stored expected {c.expected_time:.9f} != recomputed {e:.9f}")
        if c.expected_time + 1e-9 < c.travel_time:
            v.append(f"cycle {i}: expected time below travel time")
        recomputed += e
        pending_idx[p] = j
    if consistent and abs(recomputed - plan.objective) > 1e-9:
        v.append(f"objective {plan.objective:.9f} != recomputed {recomputed:.9f}")
    if abs(plan.executed_expected_time - plan.objective) > 1e-9:
        v.append("executed_expected_time differs from objective")

    return ValidationReport(v)
