"""FCFS order-stream execution and the layout/strategy comparison tables.

A stream is processed order by order: build the sequencing instance from
the current trailing state and stock, solve with the configured strategy,
charge the executed cycles, then chain the trailing state forward. The
analytic timing mode charges each cycle its expected time; the Monte Carlo
mode samples the pharmacist's sorting time per cycle.

In warmup mode the first order is costed as an isolated (non-successive)
pick: its natural cycles plus single-command return trips for the bins it
would otherwise leave at the I/O points, after which the trailing state is
empty.
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

import numpy as np

from .catalog import (Bin, InfeasibleOrderError, Order, TrailingState,
                      apply_pick, as_bin_map, build_instance)
from .geometry import RackConfig, leg_time
from .sequencing import (RetrievalPlan, solve_dp, solve_greedy, solve_optimal,
                         solve_random)
from .stochastics import SortingModel, expected_max, sample_sorting

STRATEGIES = ("optimal", "dp", "greedy", "random")
LAYOUTS = ("A", "B")


@dataclass(frozen=True)
class StreamConfig:
    layout: str
    strategy: str
    sorting: SortingModel
    timing_mode: str = "analytic"            # "analytic" | "monte_carlo"
    arrival_mode: str = "successive"         # "successive" | "warmup_then_successive"
    stock_mode: str = "infinite"             # "infinite" | "decrement"
    seed: int | None = None
    on_infeasible: str = "skip"              # "skip" | "abort"
    exclude_empty_orders: bool = False

    def __post_init__(self):
        if self.layout.upper() not in LAYOUTS:
            raise ValueError(f"unknown layout {self.layout!r}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.timing_mode not in ("analytic", "monte_carlo"):
            raise ValueError(f"unknown timing mode {self.timing_mode!r}")
        if self.arrival_mode not in ("successive", "warmup_then_successive"):
            raise ValueError(f"unknown arrival mode {self.arrival_mode!r}")
        if self.stock_mode not in ("infinite", "decrement"):
            raise ValueError(f"unknown stock mode {self.stock_mode!r}")
        if self.timing_mode == "monte_carlo" and self.seed is None:
            raise ValueError("monte_carlo timing requires a seed")
        if self.strategy == "random" and self.seed is None:
            raise ValueError("random strategy requires a seed")


@dataclass
class SimReport:
    layout: str
    per_order_times: list[float]
    order_ids: list[str]
    per_order_cycles: list[int]
    infeasible_orders: list[tuple[str, str]]
    plans: list[RetrievalPlan]
    cycle_log: list[tuple[float, bool]]      # (travel_time, carries a sort)
    bins_after: dict[str, Bin]
    excluded_empty: int = 0

    @property
    def total_cycles(self) -> int:
        return sum(self.per_order_cycles)

    @property
    def mean_time(self) -> float | None:
        times = self.per_order_times
        if self.excluded_empty:
            times = [t for t, c in zip(times, self.per_order_cycles) if c > 0]
        return statistics.fmean(times) if times else None

    @property
    def mean_cycles_per_order(self) -> float | None:
        if not self.per_order_cycles:
            return None
        return statistics.fmean(self.per_order_cycles)


def _solver(strategy: str, rng):
    if strategy == "optimal":
        return lambda inst, rack, m: solve_optimal(inst, rack, m)
    if strategy == "dp":
        return lambda inst, rack, m: solve_dp(inst, rack, m)
    if strategy == "greedy":
        return lambda inst, rack, m: solve_greedy(inst, rack, m)
    return lambda inst, rack, m: solve_random(inst, rack, m, rng)


def run_stream(orders: list[Order], inventory, rack: RackConfig,
               cfg: StreamConfig) -> SimReport:
    """Process orders FCFS and account per-order picking times."""
    layout = cfg.layout.upper()
    model = cfg.sorting
    bins = as_bin_map(inventory)
    solver_rng = np.random.default_rng([0, cfg.seed]) if cfg.seed is not None else None
    timing_rng = np.random.default_rng([1, cfg.seed]) if cfg.seed is not None else None
    solve = _solver(cfg.strategy, solver_rng)

    report = SimReport(layout=layout, per_order_times=[], order_ids=[],
                       per_order_cycles=[], infeasible_orders=[], plans=[],
                       cycle_log=[], bins_after=bins,
                       excluded_empty=cfg.exclude_empty_orders)
    trailing = TrailingState()
    first = True
    for order in sorted(orders, key=lambda o: o.arrival_index):
        warmup = first and cfg.arrival_mode == "warmup_then_successive"
        first = False
        try:
            inst = build_instance(order, bins, trailing, layout)
        except InfeasibleOrderError as e:
            if cfg.on_infeasible == "abort":
                raise
            report.infeasible_orders.append((order.id, str(e)))
            continue
        plan = solve(inst, rack, model)

        # (travel, sort carried) per executed cycle of this order.
        cycles = [(c.travel_time, True) for c in plan.cycles]
        if warmup:
            # Isolated first pick: also return the last-retrieved bins now.
            for p, bin_id in plan.new_trailing.entries:
                t = 2.0 * leg_time(rack.io_points[p - 1],
                                   inst.bins[bin_id].position, rack)
                cycles.append((t, layout == "A"))
            trailing = TrailingState()
        else:
            trailing = plan.new_trailing

        time = 0.0
        for t, sort in cycles:
            if cfg.timing_mode == "analytic":
                if layout == "A":
                    time += expected_max(model, t) if sort else t
                else:
                    time += t + (model.mu if sort else 0.0)
            else:
                x = float(sample_sorting(model, timing_rng))
                if layout == "A":
                    time += max(x, t) if sort else t
                else:
                    time += t + (x if sort else 0.0)

        if cfg.stock_mode == "decrement":
            dosage = dict(order.lines)
            for c in plan.cycles:
                if c.retrieve_bin:
                    apply_pick(bins, c.retrieve_bin, dosage[inst.bins[c.retrieve_bin].drug])
            for d in plan.sorted_in_place:
                tb = inst.trailing.bin_at(inst.overlap_flags[d])
                apply_pick(bins, tb, dosage[d])

        report.per_order_times.append(time)
        report.order_ids.append(order.id)
        report.per_order_cycles.append(len(cycles))
        report.plans.append(plan)
        report.cycle_log.extend(cycles)
    return report


def replicate_stream_means(report: SimReport, sorting: SortingModel,
                           seed: int, replications: int) -> np.ndarray:
    """Monte Carlo stream means reusing an analytic run's executed cycles.

    Solvers optimize expected times either way, so the plans of an analytic
    run are exactly the plans a sampled run would execute; only the clock
    differs. Returns one mean-picking-time estimate per replication.
    """
    n_orders = len(report.per_order_times)
    if n_orders == 0:
        raise ValueError("empty stream")
    travels = np.array([t for t, _ in report.cycle_log])
    sorts = np.array([s for _, s in report.cycle_log])
    rng = np.random.default_rng(seed)
    x = sample_sorting(sorting, rng, (replications, len(travels)))
    if report.layout == "A":
        per = np.where(sorts, np.maximum(x, travels), travels)
    else:
        per = travels + np.where(sorts, x, 0.0)
    return per.sum(axis=1) / n_orders


# ---------------------------------------------------------------------------
# Comparison tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LayoutRow:
    mu: float
    sigma: float
    t_a: float
    t_b: float
    cycles_a: float
    cycles_b: float

    @property
    def improvement(self) -> float:
        """Throughput gain of the two-I/O layout: (1/T_A - 1/T_B) / (1/T_B)."""
        return self.t_b / self.t_a - 1.0


@dataclass
class ComparisonTable:
    rows: list[LayoutRow] = field(default_factory=list)

    def series(self) -> dict[float, list[tuple[float, float]]]:
        """Improvement-vs-mu series per sigma, mu ascending."""
        out: dict[float, list[tuple[float, float]]] = {}
        for r in sorted(self.rows, key=lambda r: (r.sigma, r.mu)):
            out.setdefault(r.sigma, []).append((r.mu, r.improvement))
        return out


def compare_layouts(orders, inventory, rack: RackConfig,
                    grid: list[tuple[float, float]],
                    strategy: str = "optimal",
                    timing_mode: str = "analytic",
                    seed: int | None = None,
                    arrival_mode: str = "successive",
                    stock_mode: str = "infinite") -> ComparisonTable:
    """Run both layouts over identical order streams for each (mu, sigma)."""
    if not grid:
        raise ValueError("grid must be nonempty")
    if len(rack.io_points) != 2:
        raise ValueError("compare_layouts needs a rack with two I/O points; "
                         "layout B uses the first")
    table = ComparisonTable()
    for mu, sigma in grid:
        model = SortingModel(mu, sigma)
        reports = {}
        for layout in LAYOUTS:
            cfg = StreamConfig(layout=layout, strategy=strategy, sorting=model,
                               timing_mode=timing_mode, seed=seed,
                               arrival_mode=arrival_mode, stock_mode=stock_mode)
            reports[layout] = run_stream(orders, inventory, rack, cfg)
        ra, rb = reports["A"], reports["B"]
        table.rows.append(LayoutRow(mu=mu, sigma=sigma,
                                    t_a=ra.mean_time, t_b=rb.mean_time,
                                    cycles_a=ra.mean_cycles_per_order,
                                    cycles_b=rb.mean_cycles_per_order))
    return table


@dataclass(frozen=True)
class StrategyRow:
    mu: float
    sigma: float
    strategy: str
    mean_time: float
    mean_cycles: float


def compare_strategies(orders, inventory, rack: RackConfig,
                       points: list[tuple[float, float]], layout: str,
                       seeds: list[int],
                       timing_mode: str = "analytic",
                       arrival_mode: str = "successive",
                       stock_mode: str = "infinite") -> list[StrategyRow]:
    """Mean picking time per strategy per (mu, sigma); random averaged over seeds."""
    rows = []
    for mu, sigma in points:
        model = SortingModel(mu, sigma)
        for strategy in ("optimal", "dp", "greedy"):
            cfg = StreamConfig(layout=layout, strategy=strategy, sorting=model,
                               timing_mode=timing_mode,
                               arrival_mode=arrival_mode, stock_mode=stock_mode,
                               seed=seeds[0] if timing_mode == "monte_carlo" else None)
            r = run_stream(orders, inventory, rack, cfg)
            rows.append(StrategyRow(mu, sigma, strategy, r.mean_time,
                                    r.mean_cycles_per_order))
        means, cycles = [], []
        for s in seeds:
            cfg = StreamConfig(layout=layout, strategy="random", sorting=model,
                               timing_mode=timing_mode,
                               arrival_mode=arrival_mode, stock_mode=stock_mode,
                               seed=s)
            r = run_stream(orders, inventory, rack, cfg)
            means.append(r.mean_time)
            cycles.append(r.mean_cycles_per_order)
        rows.append(StrategyRow(mu, sigma, "random", statistics.fmean(means),
                                statistics.fmean(cycles)))
    return rows
