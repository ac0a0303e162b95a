"""0-1 model export in CPLEX LP format, a reader for the emitted subset,
and a MILP cross-check via scipy (HiGHS).

The exported model chooses one bin per order line and routes them as
node-disjoint paths, one per I/O point, rooted at the trailing bins (or at
a virtual I/O node when the prior order left nothing there). Arc costs are
precomputed constants: E[max(X, travel)] for the two-I/O layout,
travel + E[X] for the one-I/O layout. By default the model prices exactly
the executed cycles (no closing arcs back to the roots), so an external
solver's optimum matches solve_optimal. closed_tour=True instead closes
each path into its root, reproducing the literal tour-count reading of the
integer program for model-faithfulness studies.

Variables: binaries x_<p>_<i>_<j> (arc i->j anchored at I/O point p) and
z_<p>_<k> (line k sorted in place from the trailing bin at p), continuous
u_<i> (subtour-elimination ranks over non-root nodes).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .catalog import SequencingInstance
from .geometry import RackConfig, leg_time
from .sequencing import SizeError
from .stochastics import SortingModel, expected_max


@dataclass(frozen=True)
class LpConstraint:
    name: str
    coeffs: dict[str, float]
    sense: str   # "<=", ">=", "="
    rhs: float


@dataclass
class LpModel:
    name: str
    objective: dict[str, float] = field(default_factory=dict)
    constraints: list[LpConstraint] = field(default_factory=list)
    binaries: list[str] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def constraint_matrix(self):
        """(variables, c, A, senses, rhs) with a stable variable order."""
        variables = sorted(set(self.objective)
                           | {v for c in self.constraints for v in c.coeffs}
                           | set(self.binaries) | set(self.bounds))
        index = {v: i for i, v in enumerate(variables)}
        c = np.zeros(len(variables))
        for v, coef in self.objective.items():
            c[index[v]] = coef
        a = np.zeros((len(self.constraints), len(variables)))
        senses, rhs = [], []
        for r, con in enumerate(self.constraints):
            for v, coef in con.coeffs.items():
                a[r, index[v]] = coef
            senses.append(con.sense)
            rhs.append(con.rhs)
        return variables, c, a, senses, np.array(rhs)


def _token(raw: str, used: set[str]) -> str:
    t = re.sub(r"[^A-Za-z0-9]", "", raw) or "n"
    base, k = t, 1
    while t in used:
        k += 1
        t = f"{base}{k}"
    used.add(t)
    return t


def build_lp_model(instance: SequencingInstance, rack: RackConfig,
                   sorting: SortingModel, closed_tour: bool = False,
                   var_cap: int = 20000) -> LpModel:
    layout = instance.layout
    n_points = 2 if layout == "A" else 1
    if len(rack.io_points) < n_points:
        raise ValueError(f"layout {layout} needs {n_points} I/O point(s)")
    points = list(range(1, n_points + 1))
    lines = list(instance.order.lines)
    k_count = len(lines)

    # Node set L: all candidate bins of all lines, plus one root per I/O
    # point (the trailing bin there, or a virtual node at the I/O cell).
    used: set[str] = set()
    tokens: dict[str, str] = {}
    positions: dict[str, object] = {}
    group: dict[int, list[str]] = {}
    stock: dict[str, int] = {}
    for ki, (d, _) in enumerate(lines):
        group[ki] = []
        for b in instance.candidate_sets[d]:
            if b.id not in tokens:
                tokens[b.id] = _token(b.id, used)
                positions[tokens[b.id]] = b.position
                stock[tokens[b.id]] = b.stock
            group[ki].append(tokens[b.id])
    roots: dict[int, str] = {}
    for p in points:
        tb = instance.trailing.bin_at(p)
        if tb is not None:
            if tb not in tokens:
                tokens[tb] = _token(tb, used)
                positions[tokens[tb]] = instance.bins[tb].position
                stock[tokens[tb]] = instance.bins[tb].stock
            roots[p] = tokens[tb]
        else:
            roots[p] = _token(f"io{p}", used)
            positions[roots[p]] = rack.io_points[p - 1]

    nodes = sorted(positions)
    phi = [n for n in nodes if n not in roots.values()]
    big = len(nodes)
    n_bin = big * (big - 1) * n_points + k_count * n_points
    if n_bin > var_cap:
        raise SizeError(f"{n_bin} binary variables exceeds cap {var_cap}")

    def cost(p: int, i: str, j: str) -> float:
        o = rack.io_points[p - 1]
        t = (leg_time(o, positions[i], rack) + leg_time(positions[i], positions[j], rack)
             + leg_time(positions[j], o, rack))
        return expected_max(sorting, t) if layout == "A" else t + sorting.mu

    def x(p, i, j):
        return f"x_{p}_{i}_{j}"

    m = LpModel(name=f"retrieval_{layout}_{'closed' if closed_tour else 'executed'}")
    for p in points:
        for i in nodes:
            for j in nodes:
                if i != j:
                    m.binaries.append(x(p, i, j))
                    m.objective[x(p, i, j)] = cost(p, i, j)
    z_val: dict[tuple[int, int], int] = {}
    for ki, (d, _) in enumerate(lines):
        for p in points:
            m.binaries.append(f"z_{p}_{ki + 1}")
            z_val[(p, ki)] = int(instance.overlap_flags.get(d) == p)

    cid = 0

    def add(coeffs, sense, rhs, tag):
        nonlocal cid
        cid += 1
        m.constraints.append(LpConstraint(f"{tag}_{cid}", dict(coeffs), sense, float(rhs)))

    # Fix the overlap indicators (they are data, kept as variables for form).
    for (p, ki), val in z_val.items():
        add({f"z_{p}_{ki + 1}": 1.0}, "=", val, "zfix")

    # Cycles per point: strict alternation starting at the point holding
    # the oldest trailing bin.
    r_total = len(instance.routed_lines)
    start = instance.trailing.entries[0][0] if instance.trailing.entries else 1
    n_at = {p: 0 for p in points}
    for c in range(r_total):
        p = 1 if n_points == 1 else (start if c % 2 == 0 else 3 - start)
        n_at[p] += 1

    for p in points:
        arcs_p = {x(p, i, j): 1.0 for i in nodes for j in nodes if i != j}
        add(arcs_p, "=", n_at[p] + (1 if closed_tour and n_at[p] > 0 else 0), "count")
        # Root departures: the trailing bin (or virtual node) at an active
        # point starts exactly one route from its own point.
        add({x(p, roots[p], j): 1.0 for j in phi}, "=",
            1 if n_at[p] > 0 else 0, "rootout")
        for q in points:
            if q != p:
                add({x(p, roots[q], j): 1.0 for j in nodes if j != roots[q]},
                    "=", 0, "xrootout")
        into_root = {x(q, i, roots[p]): 1.0 for q in points
                     for i in nodes if i != roots[p]}
        if closed_tour:
            add(into_root, "=", 1 if n_at[p] > 0 else 0, "rootin")
        else:
            add(into_root, "=", 0, "rootin")

    # One arc enters each line's candidate set unless sorted in place.
    for ki in range(k_count):
        members = set(group[ki])
        coeffs = {x(p, i, j): 1.0 for p in points
                  for j in members for i in nodes if i not in members}
        for p in points:
            coeffs[f"z_{p}_{ki + 1}"] = 1.0
        add(coeffs, "=", 1, "cover")
        intra = {x(p, i, j): 1.0 for p in points
                 for i in members for j in members if i != j}
        if intra:
            add(intra, "=", 0, "intra")

    # Degrees and per-point path continuity.
    for j in phi:
        add({x(p, i, j): 1.0 for p in points for i in nodes if i != j},
            "<=", 1, "indeg")
        add({x(p, j, i): 1.0 for p in points for i in nodes if i != j},
            "<=", 1, "outdeg")
        for p in points:
            coeffs = {x(p, j, i): 1.0 for i in nodes if i != j}
            for i in nodes:
                if i != j:
                    coeffs[x(p, i, j)] = coeffs.get(x(p, i, j), 0.0) - 1.0
            add(coeffs, "<=", 0, "cont")

    # Stock covers the dosage wherever an arc delivers the retrieval.
    for ki, (_, q) in enumerate(lines):
        for j in group[ki]:
            add({x(p, i, j): float(q) for p in points for i in nodes if i != j},
                "<=", stock[j], "stock")

    # Subtour elimination over non-root nodes.
    for i in phi:
        m.bounds[f"u_{i}"] = (0.0, float(big))
    for p in points:
        for i in phi:
            for j in phi:
                if i != j:
                    add({f"u_{i}": 1.0, f"u_{j}": -1.0, x(p, i, j): float(big)},
                        "<=", big - 1, "mtz")
    return m


def render_lp(model: LpModel) -> str:
    lines = [f"\\ {model.name}", "Minimize"]
    terms = []
    for v in sorted(model.objective):
        coef = model.objective[v]
        terms.append(f"{'+' if coef >= 0 else '-'} {abs(coef):.12g} {v}")
    lines.append(f" obj: {' '.join(terms).lstrip('+ ')}")
    lines.append("Subject To")
    for con in model.constraints:
        terms = []
        for v in sorted(con.coeffs):
            coef = con.coeffs[v]
            terms.append(f"{'+' if coef >= 0 else '-'} {abs(coef):.12g} {v}")
        expr = " ".join(terms).lstrip("+ ")
        lines.append(f" {con.name}: {expr} {con.sense} {con.rhs:.12g}")
    if model.bounds:
        lines.append("Bounds")
        for v in sorted(model.bounds):
            lo, hi = model.bounds[v]
            lines.append(f" {lo:.12g} <= {v} <= {hi:.12g}")
    if model.binaries:
        lines.append("Binary")
        for v in sorted(model.binaries):
            lines.append(f" {v}")
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_lp(instance: SequencingInstance, rack: RackConfig,
              sorting: SortingModel, closed_tour: bool = False,
              var_cap: int = 20000) -> str:
    return render_lp(build_lp_model(instance, rack, sorting,
                                    closed_tour=closed_tour, var_cap=var_cap))


# ---------------------------------------------------------------------------
# Reader for the emitted LP subset
# ---------------------------------------------------------------------------

_TERM = re.compile(r"([+-]?)\s*(\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)?\s*([A-Za-z_][A-Za-z0-9_]*)")


def _parse_expr(expr: str) -> dict[str, float]:
    coeffs: dict[str, float] = {}
    pos = 0
    for match in _TERM.finditer(expr):
        if match.start() < pos:
            continue
        sign, num, var = match.groups()
        coef = float(num) if num else 1.0
        if sign == "-":
            coef = -coef
        coeffs[var] = coeffs.get(var, 0.0) + coef
        pos = match.end()
    return coeffs


def parse_lp(text: str) -> LpModel:
    """Parse the LP subset emitted by render_lp back into a model."""
    model = LpModel(name="parsed")
    section = None
    pending = ""

    def flush_objective(buf: str):
        if ":" in buf:
            buf = buf.split(":", 1)[1]
        model.objective.update(_parse_expr(buf))

    def flush_constraint(buf: str):
        name = None
        if ":" in buf:
            name, buf = buf.split(":", 1)
            name = name.strip()
        m = re.search(r"(<=|>=|=)\s*([+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)\s*$", buf)
        if not m:
            raise ValueError(f"constraint without sense/rhs: {buf!r}")
        sense, rhs = m.group(1), float(m.group(2))
        coeffs = _parse_expr(buf[:m.start()])
        model.constraints.append(
            LpConstraint(name or f"c{len(model.constraints) + 1}", coeffs, sense, rhs))

    for raw in text.splitlines():
        line = raw.split("\\", 1)[0].strip()
        if not line:
            continue
        low = line.lower()
        if low in ("minimize", "maximize"):
            section = "obj"
            continue
        if low in ("subject to", "st", "s.t."):
            if section == "obj" and pending:
                flush_objective(pending)
                pending = ""
            section = "cons"
            continue
        if low in ("bounds", "binary", "binaries", "general", "end"):
            if section == "obj" and pending:
                flush_objective(pending)
            elif section == "cons" and pending:
                flush_constraint(pending)
            pending = ""
            section = {"bounds": "bounds", "binary": "bin", "binaries": "bin",
                       "general": "gen", "end": None}[low]
            continue
        if section == "obj":
            pending += " " + line
        elif section == "cons":
            if ":" in line and pending:
                flush_constraint(pending)
                pending = ""
            pending += " " + line
            if re.search(r"(<=|>=|=)\s*[+-]?\d+(?:\.\d+)?(?:[eE][+-]?\d+)?\s*$", pending):
                flush_constraint(pending)
                pending = ""
        elif section == "bounds":
            m = re.match(r"([+-]?[\d.eE+-]+)\s*<=\s*([A-Za-z_][A-Za-z0-9_]*)\s*<=\s*([+-]?[\d.eE+-]+)$",
                         line)
            if not m:
                raise ValueError(f"unsupported bounds line: {line!r}")
            model.bounds[m.group(2)] = (float(m.group(1)), float(m.group(3)))
        elif section == "bin":
            model.binaries.extend(line.split())
    return model


def solve_with_milp(model: LpModel) -> tuple[float, dict[str, float]]:
    """Solve a parsed/built model with scipy's HiGHS MILP backend."""
    from scipy.optimize import Bounds, LinearConstraint, milp

    variables, c, a, senses, rhs = model.constraint_matrix()
    binaries = set(model.binaries)
    integrality = np.array([1 if v in binaries else 0 for v in variables])
    lb = np.array([0.0 if v in binaries else model.bounds.get(v, (0.0, math.inf))[0]
                   for v in variables])
    ub = np.array([1.0 if v in binaries else model.bounds.get(v, (0.0, math.inf))[1]
                   for v in variables])
    lo = np.array([rhs[i] if senses[i] in ("=", ">=") else -math.inf
                   for i in range(len(senses))])
    hi = np.array([rhs[i] if senses[i] in ("=", "<=") else math.inf
                   for i in range(len(senses))])
    res = milp(c=c, constraints=LinearConstraint(a, lo, hi),
               integrality=integrality, bounds=Bounds(lb, ub))
    if not res.success:
        raise RuntimeError(f"MILP solve failed: {res.message}")
    return float(res.fun), dict(zip(variables, res.x))
