"""Command-line entry point.

Subcommands: generate, solve, simulate, compare-layouts, compare-strategies,
validate, export-lp. Every run is reproducible: outputs embed the scenario
hash and the seeds used, and reruns with identical inputs produce
byte-identical CSVs.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import reporting
from .catalog import DatasetError, GeneratorSpecError, InfeasibleOrderError, \
    TrailingState, build_instance, write_dataset
from .geometry import BoundsError
from .lpexport import export_lp
from .scenario import Scenario, ScenarioError, load_scenario
from .sequencing import SizeError, solve_dp, solve_greedy, solve_optimal, \
    solve_random, validate_plan
from .simulator import StreamConfig, compare_layouts, compare_strategies, run_stream
from .stochastics import SortingModel

_SOLVERS = {"optimal": solve_optimal, "dp": solve_dp, "greedy": solve_greedy}

_USER_ERRORS = (ScenarioError, DatasetError, GeneratorSpecError,
                InfeasibleOrderError, SizeError, BoundsError, ValueError,
                FileNotFoundError, KeyError)


def _common(p: argparse.ArgumentParser, out_required=True):
    p.add_argument("--scenario", required=True, help="scenario file (key = value)")
    p.add_argument("--out", required=out_required, help="output directory")
    p.add_argument("--seed", type=int, help="override the scenario seeds")
    p.add_argument("--mode", choices=["analytic", "mc"], help="timing mode override")
    p.add_argument("--layout", choices=["a", "b", "A", "B"], help="layout override")
    p.add_argument("--strategy", choices=["optimal", "dp", "greedy", "random"],
                   help="strategy override")
    p.add_argument("--preset", choices=["paper-5"],
                   help="accepted for symmetry; the scenario default is already paper-5")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="addsim",
                                 description="Drug retrieval sequencing and "
                                             "order-stream simulation toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset")
    _common(p)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="solve one order and print the plan")
    _common(p, out_required=False)
    p.add_argument("--order-id", help="order to solve (default: first arrival)")
    p.add_argument("--mu", type=float, help="sorting-time mean override")
    p.add_argument("--sigma", type=float, help="sorting-time std override")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", help="run one order stream")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare-layouts", help="two I/O points vs one over a (mu, sigma) grid")
    _common(p)
    p.set_defaults(func=cmd_compare_layouts)

    p = sub.add_parser("compare-strategies", help="optimal vs dp/greedy/random")
    _common(p)
    p.set_defaults(func=cmd_compare_strategies)

    p = sub.add_parser("validate", help="validate a plan file")
    _common(p, out_required=False)
    p.add_argument("--plan", required=True, help="plan JSON produced by solve")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("export-lp", help="emit the 0-1 model in LP format")
    _common(p, out_required=False)
    p.add_argument("--order-id", help="order to export (default: first arrival)")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--closed-tour", action="store_true",
                   help="literal closed-tour arc counting instead of executed routes")
    p.add_argument("--lp-out", help="output .lp path (default: <out>/model.lp or stdout)")
    p.set_defaults(func=cmd_export_lp)
    return ap


def _load(args) -> Scenario:
    sc = load_scenario(args.scenario)
    if args.seed is not None:
        sc.seeds = [args.seed]
    if args.mode is not None:
        sc.timing_mode = "monte_carlo" if args.mode == "mc" else "analytic"
    if args.layout is not None:
        sc.layouts = [args.layout.upper()]
    if getattr(args, "strategy", None):
        sc.strategies = [args.strategy]
    return sc


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_section(sc: Scenario) -> list[str]:
    rk = sc.rack
    return [
        f"- scenario: `{sc.source}` (sha256 `{sc.sha256}`)",
        f"- rack: {rk.rows}x{rk.cols}, cell {rk.cell_height} m x {rk.cell_length} m, "
        f"speed {rk.speed} m/s, I/O at "
        + ", ".join(f"({p.row},{p.col}) side {p.side}" for p in rk.io_points),
        f"- mu: {sc.mu}; sigma: {sc.sigma}",
        f"- layouts: {sc.layouts}; strategies: {sc.strategies}; seeds: {sc.seeds}",
        f"- modes: timing={sc.timing_mode}, arrival={sc.arrival_mode}, stock={sc.stock_mode}",
        f"- dataset: " + (f"files {sc.inventory_path}, {sc.orders_path}"
                          if sc.inventory_path else
                          f"generated (seed {sc.gen_seed}, {sc.generator.order_count} orders, "
                          f"{sc.generator.drug_count} drugs)"),
    ]


def _first_order(orders, order_id):
    if order_id is None:
        return orders[0]
    for o in orders:
        if o.id == order_id:
            return o
    raise ScenarioError(f"order {order_id!r} not in dataset")


def cmd_generate(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    bins, orders = sc.dataset()
    write_dataset(bins, orders, out / "inventory.csv", out / "orders.csv")
    reporting.write_markdown(out / "summary.md", "Dataset generation", [
        ("Configuration", _config_section(sc)),
        ("Output", [f"- {len(bins)} bins -> `inventory.csv`",
                    f"- {len(orders)} orders -> `orders.csv`"]),
    ])
    print(f"wrote {len(bins)} bins and {len(orders)} orders to {out}")
    return 0


def cmd_solve(args) -> int:
    sc = _load(args)
    bins, orders = sc.dataset()
    if not orders:
        raise ScenarioError("dataset has no orders")
    order = _first_order(orders, args.order_id)
    layout = sc.layouts[0]
    strategy = sc.strategies[0]
    mu = args.mu if args.mu is not None else sc.mu[0]
    sigma = args.sigma if args.sigma is not None else sc.sigma[0]
    model = SortingModel(mu, sigma)
    trailing = TrailingState()
    inst = build_instance(order, bins, trailing, layout)
    if strategy == "random":
        plan = solve_random(inst, sc.rack, model, sc.seeds[0])
    else:
        plan = _SOLVERS[strategy](inst, sc.rack, model)

    print(f"order {order.id} layout {layout} strategy {strategy} "
          f"mu={mu:g} sigma={sigma:g}")
    for i, c in enumerate(plan.cycles, start=1):
        ret = c.return_bin or "-"
        print(f"  cycle {i}: I/O {c.io_point}  return {ret:>8}  "
              f"retrieve {c.retrieve_bin:>8}  travel {c.travel_time:.4f} s  "
              f"expected {c.expected_time:.4f} s")
    if plan.sorted_in_place:
        print(f"  sorted in place: {', '.join(plan.sorted_in_place)}")
    print(f"objective: {plan.objective:.6f} s")
    if args.out:
        out = _outdir(args)
        reporting.save_plan(out / "plan.json", plan, order.id, mu, sigma, trailing)
        print(f"plan written to {out / 'plan.json'}")
    return 0


def cmd_simulate(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    bins, orders = sc.dataset()
    layout = sc.layouts[0]
    strategy = sc.strategies[0]
    seed = sc.seeds[0]
    model = SortingModel(sc.mu[0], sc.sigma[0])
    cfg = StreamConfig(layout=layout, strategy=strategy, sorting=model,
                       timing_mode=sc.timing_mode, arrival_mode=sc.arrival_mode,
                       stock_mode=sc.stock_mode, seed=seed)
    report = run_stream(orders, bins, sc.rack, cfg)

    rows = [{"mu": model.mu, "sigma": model.sigma, "layout": layout,
             "strategy": strategy, "mean_time": report.mean_time,
             "mean_cycles": report.mean_cycles_per_order}]
    reporting.write_results_csv(out / "results.csv", rows, sc.sha256, seed)
    lines = [reporting.provenance_line(sc.sha256, seed), "order_id,picking_time,cycles"]
    for oid, t, c in zip(report.order_ids, report.per_order_times,
                         report.per_order_cycles):
        lines.append(f"{oid},{reporting.fmt(t)},{c}")
    (out / "per_order.csv").write_text("\n".join(lines) + "\n")
    body = [f"- orders processed: {len(report.per_order_times)}",
            f"- infeasible (skipped): {len(report.infeasible_orders)}",
            f"- mean picking time: {reporting.fmt(report.mean_time)} s",
            f"- mean cycles per order: {reporting.fmt(report.mean_cycles_per_order)}"]
    reporting.write_markdown(out / "summary.md", "Stream simulation", [
        ("Configuration", _config_section(sc)), ("Results", body)])
    print(f"mean picking time {reporting.fmt(report.mean_time)} s over "
          f"{len(report.per_order_times)} orders; outputs in {out}")
    return 0


def cmd_compare_layouts(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    bins, orders = sc.dataset()
    strategy = sc.strategies[0]
    seed = sc.seeds[0]
    grid = [(m, s) for m in sc.mu for s in sc.sigma]
    table = compare_layouts(orders, bins, sc.rack, grid, strategy=strategy,
                            timing_mode=sc.timing_mode, seed=seed,
                            arrival_mode=sc.arrival_mode, stock_mode=sc.stock_mode)

    rows = []
    for r in sorted(table.rows, key=lambda r: (r.mu, r.sigma)):
        rows.append({"mu": r.mu, "sigma": r.sigma, "layout": "A",
                     "strategy": strategy, "mean_time": r.t_a,
                     "mean_cycles": r.cycles_a, "improvement": r.improvement})
        rows.append({"mu": r.mu, "sigma": r.sigma, "layout": "B",
                     "strategy": strategy, "mean_time": r.t_b,
                     "mean_cycles": r.cycles_b})
    reporting.write_results_csv(out / "results.csv", rows, sc.sha256, seed)
    reporting.write_layout_table_csv(out / "layout_table.csv", table, sc.sha256, seed)
    reporting.render_improvement_figure(table, out / "fig_improvement.png")
    reporting.render_layout_times_figure(table, out / "fig_mean_times.png")

    md_rows = [[reporting.fmt(r.mu), reporting.fmt(r.sigma), reporting.fmt(r.t_a),
                reporting.fmt(r.t_b), f"{100 * r.improvement:.2f}%"]
               for r in sorted(table.rows, key=lambda r: (r.mu, r.sigma))]
    reporting.write_markdown(out / "summary.md", "Layout comparison", [
        ("Configuration", _config_section(sc)),
        ("Mean picking time", reporting.markdown_table(
            ["mu", "sigma", "two I/O (A)", "one I/O (B)", "improvement"], md_rows)),
        ("Figures", ["- `fig_improvement.png`: improvement vs mu, one curve per sigma",
                     "- `fig_mean_times.png`: mean picking times per layout"]),
    ])
    print(f"compared {len(table.rows)} grid points; outputs in {out}")
    return 0


def cmd_compare_strategies(args) -> int:
    sc = _load(args)
    out = _outdir(args)
    bins, orders = sc.dataset()
    points = [(m, s) for m in sc.mu for s in sc.sigma]
    all_rows = []
    for layout in sc.layouts:
        for r in compare_strategies(orders, bins, sc.rack, points, layout,
                                    sc.seeds, timing_mode=sc.timing_mode,
                                    arrival_mode=sc.arrival_mode,
                                    stock_mode=sc.stock_mode):
            all_rows.append({"mu": r.mu, "sigma": r.sigma, "layout": layout,
                             "strategy": r.strategy, "mean_time": r.mean_time,
                             "mean_cycles": r.mean_cycles})
    order_key = {"optimal": 0, "dp": 1, "greedy": 2, "random": 3}
    all_rows.sort(key=lambda r: (r["layout"], r["mu"], r["sigma"],
                                 order_key[r["strategy"]]))
    reporting.write_results_csv(out / "results.csv", all_rows, sc.sha256, sc.seeds[0])
    reporting.render_strategy_figure(all_rows, out / "fig_strategies.png")

    # Dominance chain on stream means: optimal <= dp <= greedy, dp <= random.
    chain_ok, chain_lines = True, []
    for layout in sc.layouts:
        for m, s in points:
            by = {r["strategy"]: r["mean_time"] for r in all_rows
                  if r["layout"] == layout and r["mu"] == m and r["sigma"] == s}
            ok = (by["optimal"] <= by["dp"] + 1e-9 and by["dp"] <= by["greedy"] + 1e-9
                  and by["dp"] <= by["random"] + 1e-9)
            chain_ok &= ok
            chain_lines.append(
                f"- layout {layout}, mu={reporting.fmt(m)}, sigma={reporting.fmt(s)}: "
                f"optimal {reporting.fmt(by['optimal'])} <= dp {reporting.fmt(by['dp'])} "
                f"<= greedy {reporting.fmt(by['greedy'])}; random {reporting.fmt(by['random'])}"
                f" -> {'ok' if ok else 'VIOLATED'}")
    chain_lines.insert(0, f"- dominance chain: {'PASS' if chain_ok else 'FAIL'}")

    reporting.write_markdown(out / "summary.md", "Strategy comparison", [
        ("Configuration", _config_section(sc)),
        ("Dominance check", chain_lines),
        ("Figures", ["- `fig_strategies.png`: mean picking time per strategy"]),
    ])
    print(f"compared strategies on {len(points)} grid points; outputs in {out}")
    return 0 if chain_ok else 1


def cmd_validate(args) -> int:
    sc = _load(args)
    bins, orders = sc.dataset()
    plan, ctx = reporting.load_plan(args.plan)
    order = _first_order(orders, ctx["order_id"])
    model = SortingModel(ctx["mu"], ctx["sigma"])
    inst = build_instance(order, bins, ctx["trailing"], plan.layout)
    report = validate_plan(plan, inst, sc.rack, model)
    if report.ok:
        print(f"plan for order {order.id}: all checks passed")
        return 0
    for v in report.violations:
        print(f"violation: {v}")
    print(f"error: plan failed validation with {len(report.violations)} violation(s)",
          file=sys.stderr)
    return 1


def cmd_export_lp(args) -> int:
    sc = _load(args)
    bins, orders = sc.dataset()
    if not orders:
        raise ScenarioError("dataset has no orders")
    order = _first_order(orders, args.order_id)
    layout = sc.layouts[0]
    mu = args.mu if args.mu is not None else sc.mu[0]
    sigma = args.sigma if args.sigma is not None else sc.sigma[0]
    inst = build_instance(order, bins, TrailingState(), layout)
    text = export_lp(inst, sc.rack, SortingModel(mu, sigma),
                     closed_tour=args.closed_tour)
    if args.lp_out:
        Path(args.lp_out).write_text(text)
        print(f"LP model written to {args.lp_out}")
    elif args.out:
        out = _outdir(args)
        (out / "model.lp").write_text(text)
        print(f"LP model written to {out / 'model.lp'}")
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _USER_ERRORS as e:
        msg = " ".join(str(e).split())
        print(f"error: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
