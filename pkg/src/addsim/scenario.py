"""Scenario files: flat `key = value` text driving reproducible experiments.

Lists are comma-separated; grid positions are side:row:col triples. Lines
starting with `#` are comments. See scenarios/example.scenario in the repo
for every key with its default.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import GeneratorSpec, generate_stream, load_dataset
from .geometry import GridPosition, RackConfig, paper_rack


class ScenarioError(ValueError):
    pass


def parse_kv(path) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected 'key = value'")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip() != ""]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip() != ""]


def _range(s: str) -> tuple[int, int]:
    lo, _, hi = s.partition(":")
    return (int(lo), int(hi if hi else lo))


def _positions(s: str) -> tuple[GridPosition, ...]:
    out = []
    for part in s.split(","):
        side, row, col = part.strip().split(":")
        out.append(GridPosition(int(side), int(row), int(col)))
    return tuple(out)


@dataclass
class Scenario:
    rack: RackConfig
    mu: list[float] = field(default_factory=lambda: [5.0, 10.0, 15.0, 20.0, 25.0])
    sigma: list[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0])
    layouts: list[str] = field(default_factory=lambda: ["A", "B"])
    strategies: list[str] = field(default_factory=lambda: ["optimal"])
    seeds: list[int] = field(default_factory=lambda: [0])
    timing_mode: str = "analytic"
    arrival_mode: str = "successive"
    stock_mode: str = "infinite"
    inventory_path: Path | None = None
    orders_path: Path | None = None
    generator: GeneratorSpec | None = None
    gen_seed: int = 0
    sha256: str = ""
    source: Path | None = None

    def dataset(self):
        """(bins, orders) from files when given, else from the generator."""
        if self.inventory_path is not None:
            if self.orders_path is None:
                raise ScenarioError("scenario names an inventory but no orders file")
            return load_dataset(self.inventory_path, self.orders_path, self.rack)
        gen = self.generator or default_generator(self.rack)
        return generate_stream(gen, self.gen_seed)


def default_generator(rack: RackConfig) -> GeneratorSpec:
    """The default desk-scale synthetic benchmark (100 orders)."""
    reserved = tuple((p.side, p.row, p.col) for p in rack.io_points)
    return GeneratorSpec(rows=rack.rows, cols=rack.cols, sides=2,
                         drug_count=60, bins_per_drug=(1, 3), stock=(50, 200),
                         order_count=100, k_range=(2, 6), popularity="uniform",
                         dosage=(1, 5), reserved_cells=reserved)


def load_scenario(path) -> Scenario:
    path = Path(path)
    raw = path.read_bytes()
    kv = parse_kv(path)
    known_prefixes = ("gen_",)
    known = {"preset", "rows", "cols", "cell_height", "cell_length", "speed",
             "io_points", "mu", "sigma", "layouts", "strategies", "seeds",
             "timing_mode", "arrival_mode", "stock_mode", "inventory", "orders"}
    for k in kv:
        if k not in known and not k.startswith(known_prefixes):
            raise ScenarioError(f"unknown scenario key {k!r}")

    preset = kv.get("preset", "paper-5" if "rows" not in kv else None)
    if preset is not None:
        if preset != "paper-5":
            raise ScenarioError(f"unknown preset {preset!r}")
        rack = paper_rack("A")
    else:
        try:
            rack = RackConfig(rows=int(kv["rows"]), cols=int(kv["cols"]),
                              cell_height=float(kv["cell_height"]),
                              cell_length=float(kv["cell_length"]),
                              speed=float(kv["speed"]),
                              io_points=_positions(kv["io_points"]))
        except KeyError as e:
            raise ScenarioError(f"missing rack key {e.args[0]}") from e

    sc = Scenario(rack=rack, sha256=hashlib.sha256(raw).hexdigest(), source=path)
    if "mu" in kv:
        sc.mu = _floats(kv["mu"])
    if "sigma" in kv:
        sc.sigma = _floats(kv["sigma"])
    if "layouts" in kv:
        sc.layouts = [v.strip().upper() for v in kv["layouts"].split(",")]
    if "strategies" in kv:
        sc.strategies = [v.strip() for v in kv["strategies"].split(",")]
    if "seeds" in kv:
        sc.seeds = _ints(kv["seeds"])
    for mode in ("timing_mode", "arrival_mode", "stock_mode"):
        if mode in kv:
            setattr(sc, mode, kv[mode])
    if "inventory" in kv:
        sc.inventory_path = path.parent / kv["inventory"]
        sc.orders_path = path.parent / kv["orders"] if "orders" in kv else None
    if any(k.startswith("gen_") for k in kv) or "inventory" not in kv:
        fields = GeneratorSpec.__dataclass_fields__
        base = {name: fields[name].default for name in fields}
        sc.generator = GeneratorSpec(
            rows=rack.rows, cols=rack.cols, sides=2,
            drug_count=int(kv.get("gen_drugs", base["drug_count"])),
            bins_per_drug=_range(kv["gen_bins_per_drug"]) if "gen_bins_per_drug" in kv
            else base["bins_per_drug"],
            stock=_range(kv["gen_stock"]) if "gen_stock" in kv else base["stock"],
            order_count=int(kv.get("gen_orders", base["order_count"])),
            k_range=_range(kv["gen_k"]) if "gen_k" in kv else base["k_range"],
            popularity=kv.get("gen_popularity", base["popularity"]),
            zipf_s=float(kv.get("gen_zipf_s", base["zipf_s"])),
            dosage=_range(kv["gen_dosage"]) if "gen_dosage" in kv else base["dosage"],
            reserved_cells=tuple((p.side, p.row, p.col) for p in rack.io_points))
        sc.gen_seed = int(kv.get("gen_seed", 0))
    return sc
