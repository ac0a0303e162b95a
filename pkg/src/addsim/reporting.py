"""Delimited output, Markdown summaries, plan JSON, and figure rendering.

Every CSV starts with a comment line carrying the scenario hash and seed so
a result file can be traced back to the exact configuration that made it.
Numbers are written with 6 significant digits and a `.` decimal separator,
and rows are emitted in a fixed order, so reruns are byte-identical.
"""
from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .catalog import TrailingState
from .sequencing import Cycle, RetrievalPlan

RESULT_COLUMNS = "mu,sigma,layout,strategy,mean_time,mean_cycles,improvement"


def fmt(x) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def provenance_line(scenario_hash: str, seed=None) -> str:
    line = f"# scenario_sha256={scenario_hash}"
    if seed is not None:
        line += f" seed={seed}"
    return line


def write_results_csv(path, rows, scenario_hash: str, seed=None) -> None:
    """rows: dicts with the RESULT_COLUMNS keys (missing -> blank)."""
    cols = RESULT_COLUMNS.split(",")
    lines = [provenance_line(scenario_hash, seed), RESULT_COLUMNS]
    for r in rows:
        lines.append(",".join(
            fmt(r.get(c)) if isinstance(r.get(c), (int, float)) else str(r.get(c, ""))
            for c in cols))
    Path(path).write_text("\n".join(lines) + "\n")


def write_layout_table_csv(path, table, scenario_hash: str, seed=None) -> None:
    """The layout-comparison table: one row per (mu, sigma)."""
    lines = [provenance_line(scenario_hash, seed),
             "mu,sigma,layout_a_mean_time,layout_b_mean_time,improvement"]
    for r in sorted(table.rows, key=lambda r: (r.mu, r.sigma)):
        lines.append(",".join([fmt(r.mu), fmt(r.sigma), fmt(r.t_a), fmt(r.t_b),
                               fmt(r.improvement)]))
    Path(path).write_text("\n".join(lines) + "\n")


def write_markdown(path, title: str, sections: list[tuple[str, list[str]]]) -> None:
    lines = [f"# {title}", ""]
    for heading, body in sections:
        lines.append(f"## {heading}")
        lines.extend(body)
        lines.append("")
    Path(path).write_text("\n".join(lines))


def markdown_table(header: list[str], rows: list[list[str]]) -> list[str]:
    out = ["| " + " | ".join(header) + " |",
           "|" + "|".join(["---"] * len(header)) + "|"]
    for r in rows:
        out.append("| " + " | ".join(r) + " |")
    return out


# ---------------------------------------------------------------------------
# Plan JSON
# ---------------------------------------------------------------------------

def plan_to_dict(plan: RetrievalPlan, order_id: str, mu: float, sigma: float,
                 trailing: TrailingState) -> dict:
    return {
        "order_id": order_id,
        "layout": plan.layout,
        "mu": mu,
        "sigma": sigma,
        "trailing": [[p, b] for p, b in trailing.entries],
        "cycles": [{"io_point": c.io_point, "return_bin": c.return_bin,
                    "retrieve_bin": c.retrieve_bin,
                    "travel_time": c.travel_time,
                    "expected_time": c.expected_time} for c in plan.cycles],
        "sorted_in_place": list(plan.sorted_in_place),
        "objective": plan.objective,
        "executed_expected_time": plan.executed_expected_time,
        "new_trailing": [[p, b] for p, b in plan.new_trailing.entries],
    }


def save_plan(path, plan: RetrievalPlan, order_id: str, mu: float, sigma: float,
              trailing: TrailingState) -> None:
    Path(path).write_text(
        json.dumps(plan_to_dict(plan, order_id, mu, sigma, trailing), indent=2) + "\n")


def load_plan(path) -> tuple[RetrievalPlan, dict]:
    """Returns the plan plus the context dict (order_id, mu, sigma, trailing)."""
    d = json.loads(Path(path).read_text())
    plan = RetrievalPlan(
        layout=d["layout"],
        cycles=tuple(Cycle(io_point=c["io_point"], return_bin=c["return_bin"],
                           retrieve_bin=c["retrieve_bin"],
                           travel_time=c["travel_time"],
                           expected_time=c["expected_time"]) for c in d["cycles"]),
        sorted_in_place=tuple(d["sorted_in_place"]),
        objective=d["objective"],
        executed_expected_time=d["executed_expected_time"],
        new_trailing=TrailingState(tuple((p, b) for p, b in d["new_trailing"])))
    ctx = {"order_id": d["order_id"], "mu": d["mu"], "sigma": d["sigma"],
           "trailing": TrailingState(tuple((p, b) for p, b in d["trailing"]))}
    return plan, ctx


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def render_improvement_figure(table, path) -> None:
    """Improvement-vs-mu curves, one line per sigma."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for sigma, pts in sorted(table.series().items()):
        mus = [m for m, _ in pts]
        imps = [100.0 * v for _, v in pts]
        ax.plot(mus, imps, marker="o", markersize=3, label=f"sigma = {fmt(sigma)}")
    ax.set_xlabel("mean sorting time mu (s)")
    ax.set_ylabel("picking efficiency improvement (%)")
    ax.set_title("Two I/O points vs one: efficiency improvement")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_layout_times_figure(table, path) -> None:
    fig, ax = plt.subplots(figsize=(7, 4.5))
    series_a: dict[float, list[tuple[float, float]]] = {}
    series_b: dict[float, list[tuple[float, float]]] = {}
    for r in sorted(table.rows, key=lambda r: (r.sigma, r.mu)):
        series_a.setdefault(r.sigma, []).append((r.mu, r.t_a))
        series_b.setdefault(r.sigma, []).append((r.mu, r.t_b))
    for sigma, pts in sorted(series_a.items()):
        ax.plot([m for m, _ in pts], [t for _, t in pts], marker="o",
                markersize=3, label=f"two I/O, sigma={fmt(sigma)}")
    sigma0 = min(series_b)
    pts = series_b[sigma0]
    ax.plot([m for m, _ in pts], [t for _, t in pts], marker="s",
            markersize=3, color="black", linestyle="--", label="one I/O (any sigma)")
    ax.set_xlabel("mean sorting time mu (s)")
    ax.set_ylabel("mean picking time (s)")
    ax.set_title("Mean picking time per layout")
    ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_strategy_figure(rows, path) -> None:
    """Grouped bars: mean picking time per strategy per (mu, sigma, layout)."""
    strategies = ["optimal", "dp", "greedy", "random"]
    groups = sorted({(r["layout"], r["mu"], r["sigma"]) for r in rows})
    fig, ax = plt.subplots(figsize=(max(7, 1.2 * len(groups)), 4.5))
    width = 0.8 / len(strategies)
    for si, s in enumerate(strategies):
        xs, ys = [], []
        for gi, g in enumerate(groups):
            for r in rows:
                if (r["layout"], r["mu"], r["sigma"]) == g and r["strategy"] == s:
                    xs.append(gi + (si - 1.5) * width)
                    ys.append(r["mean_time"])
        ax.bar(xs, ys, width=width, label=s)
    ax.set_xticks(range(len(groups)))
    ax.set_xticklabels([f"{lay}\nmu={fmt(m)}\nsig={fmt(s)}" for lay, m, s in groups],
                       fontsize=8)
    ax.set_ylabel("mean picking time (s)")
    ax.set_title("Picking strategies compared")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
