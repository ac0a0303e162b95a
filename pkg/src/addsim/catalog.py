"""Inventory and order data model, sequencing-instance construction,
CSV dataset I/O, and the seeded synthetic order-stream generator.

An order line is satisfied either from one storage bin whose remaining
stock covers the whole dosage (no splitting across bins), or sorted in
place from a trailing bin already sitting at an I/O point.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace
from typing import Iterable, Mapping

import numpy as np

from .geometry import GridPosition, RackConfig


class InfeasibleOrderError(ValueError):
    """No single bin covers an order line's dosage."""

    def __init__(self, order_id: str, drug_id: str, dosage: int):
        self.order_id = order_id
        self.drug_id = drug_id
        self.dosage = dosage
        super().__init__(
            f"order {order_id}: no bin of drug {drug_id} has stock >= {dosage}")


class DatasetError(ValueError):
    """Malformed or inconsistent dataset file."""


class GeneratorSpecError(ValueError):
    """Unsatisfiable generator parameters."""


@dataclass(frozen=True)
class Bin:
    id: str
    position: GridPosition
    drug: str
    stock: int

    def __post_init__(self):
        if self.stock < 0:
            raise ValueError(f"bin {self.id}: stock must be >= 0")


@dataclass(frozen=True)
class Order:
    id: str
    arrival_index: int
    lines: tuple[tuple[str, int], ...]  # (drug_id, dosage)

    def __post_init__(self):
        if self.arrival_index < 0:
            raise ValueError(f"order {self.id}: arrival_index must be >= 0")
        if len(self.lines) < 2:
            raise ValueError(f"order {self.id}: needs at least 2 lines")
        drugs = [d for d, _ in self.lines]
        if len(set(drugs)) != len(drugs):
            raise ValueError(f"order {self.id}: duplicate drug in order")
        for d, q in self.lines:
            if q < 1:
                raise ValueError(f"order {self.id}: dosage for {d} must be >= 1")

    @property
    def drugs(self) -> tuple[str, ...]:
        return tuple(d for d, _ in self.lines)


@dataclass(frozen=True)
class TrailingState:
    """Bins left at the I/O points by the prior order, oldest first.

    Each entry is (io_point, bin_id) with io_point 1-based. Empty at the
    start of a busy period.
    """
    entries: tuple[tuple[int, str], ...] = ()

    def __post_init__(self):
        points = [p for p, _ in self.entries]
        if len(set(points)) != len(points):
            raise ValueError("at most one trailing bin per I/O point")

    def bin_at(self, io_point: int) -> str | None:
        for p, b in self.entries:
            if p == io_point:
                return b
        return None

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class SequencingInstance:
    layout: str                       # "A" or "B"
    order: Order
    candidate_sets: Mapping[str, tuple[Bin, ...]]   # drug -> M_k, sorted by bin id
    trailing: TrailingState
    overlap_flags: Mapping[str, int]  # drug -> io_point holding its trailing bin
    bins: Mapping[str, Bin]           # id -> Bin for every bin referenced

    @property
    def routed_lines(self) -> tuple[tuple[str, int], ...]:
        """Order lines that need a retrieval cycle, in prescription order."""
        return tuple((d, q) for d, q in self.order.lines
                     if d not in self.overlap_flags)

    @property
    def node_set(self) -> tuple[str, ...]:
        """Candidate bins plus trailing bins (the model's node set)."""
        ids = set()
        for bins in self.candidate_sets.values():
            ids.update(b.id for b in bins)
        ids.update(b for _, b in self.trailing.entries)
        return tuple(sorted(ids))


def as_bin_map(inventory: Iterable[Bin] | Mapping[str, Bin]) -> dict[str, Bin]:
    if isinstance(inventory, Mapping):
        return dict(inventory)
    return {b.id: b for b in inventory}


def build_instance(order: Order, inventory: Iterable[Bin] | Mapping[str, Bin],
                   trailing: TrailingState, layout: str) -> SequencingInstance:
    """Assemble candidate sets and overlap flags for one order.

    A line overlaps when a trailing bin holds its drug with sufficient
    stock; the pharmacist sorts it at the I/O point and the line needs no
    retrieval cycle. Raises InfeasibleOrderError when some line has no
    sufficiently stocked bin and no overlap.
    """
    layout = layout.upper()
    if layout not in ("A", "B"):
        raise ValueError(f"layout must be A or B, got {layout}")
    max_trailing = 2 if layout == "A" else 1
    if len(trailing) > max_trailing:
        raise ValueError(f"layout {layout} allows at most {max_trailing} trailing bins")

    bin_map = as_bin_map(inventory)
    referenced: dict[str, Bin] = {}

    overlap: dict[str, int] = {}
    for io_point, bin_id in trailing.entries:
        if bin_id not in bin_map:
            raise DatasetError(f"trailing bin {bin_id} not in inventory")
        tb = bin_map[bin_id]
        referenced[tb.id] = tb
        for d, q in order.lines:
            if tb.drug == d and tb.stock >= q and d not in overlap:
                overlap[d] = io_point

    candidate_sets: dict[str, tuple[Bin, ...]] = {}
    for d, q in order.lines:
        cands = sorted((b for b in bin_map.values()
                        if b.drug == d and b.stock >= q),
                       key=lambda b: b.id)
        if not cands and d not in overlap:
            raise InfeasibleOrderError(order.id, d, q)
        candidate_sets[d] = tuple(cands)
        for b in cands:
            referenced[b.id] = b

    return SequencingInstance(layout=layout, order=order,
                              candidate_sets=candidate_sets,
                              trailing=trailing, overlap_flags=overlap,
                              bins=referenced)


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------

_INV_HEADER = ["bin_id", "side", "row", "col", "drug_id", "stock"]
_ORD_HEADER = ["order_id", "arrival_index", "line_index", "drug_id", "dosage"]


def load_dataset(inventory_file, orders_file,
                 rack: RackConfig) -> tuple[dict[str, Bin], list[Order]]:
    """Read and validate the inventory and orders CSVs."""
    bins: dict[str, Bin] = {}
    occupied: set[tuple[int, int, int]] = set()
    with open(inventory_file, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != _INV_HEADER:
            raise DatasetError(f"{inventory_file}: expected header {','.join(_INV_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                bin_id, side, r, c, drug_id, stock = row
                pos = GridPosition(int(side), int(r), int(c))
                b = Bin(bin_id, pos, drug_id, int(stock))
            except (ValueError, TypeError) as e:
                raise DatasetError(f"{inventory_file}:{lineno}: {e}") from e
            if not rack.contains(pos):
                raise DatasetError(f"{inventory_file}:{lineno}: position {pos} outside rack")
            if b.id in bins:
                raise DatasetError(f"{inventory_file}:{lineno}: duplicate bin id {b.id}")
            cell = (pos.side, pos.row, pos.col)
            if cell in occupied:
                raise DatasetError(f"{inventory_file}:{lineno}: cell {cell} already occupied")
            occupied.add(cell)
            bins[b.id] = b

    known_drugs = {b.drug for b in bins.values()}
    grouped: dict[str, list[tuple[int, str, int]]] = {}
    arrival: dict[str, int] = {}
    order_seq: list[str] = []
    with open(orders_file, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != _ORD_HEADER:
            raise DatasetError(f"{orders_file}: expected header {','.join(_ORD_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                order_id, arr, line_idx, drug_id, dosage = row
                arr, line_idx, dosage = int(arr), int(line_idx), int(dosage)
            except (ValueError, TypeError) as e:
                raise DatasetError(f"{orders_file}:{lineno}: {e}") from e
            if drug_id not in known_drugs:
                raise DatasetError(f"{orders_file}:{lineno}: unknown drug {drug_id}")
            if order_id not in grouped:
                grouped[order_id] = []
                arrival[order_id] = arr
                order_seq.append(order_id)
            elif arrival[order_id] != arr:
                raise DatasetError(f"{orders_file}:{lineno}: inconsistent arrival_index "
                                   f"for order {order_id}")
            grouped[order_id].append((line_idx, drug_id, dosage))

    orders = []
    for oid in order_seq:
        lines = tuple((d, q) for _, d, q in sorted(grouped[oid]))
        try:
            orders.append(Order(oid, arrival[oid], lines))
        except ValueError as e:
            raise DatasetError(f"{orders_file}: {e}") from e
    orders.sort(key=lambda o: o.arrival_index)
    return bins, orders


def write_dataset(bins: Mapping[str, Bin], orders: Iterable[Order],
                  inventory_file, orders_file) -> None:
    with open(inventory_file, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_INV_HEADER)
        for b in sorted(bins.values(), key=lambda b: b.id):
            w.writerow([b.id, b.position.side, b.position.row, b.position.col,
                        b.drug, b.stock])
    with open(orders_file, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(_ORD_HEADER)
        for o in sorted(orders, key=lambda o: o.arrival_index):
            for idx, (d, q) in enumerate(o.lines):
                w.writerow([o.id, o.arrival_index, idx, d, q])


# ---------------------------------------------------------------------------
# Synthetic order streams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GeneratorSpec:
    rows: int = 17
    cols: int = 17
    sides: int = 2
    drug_count: int = 60
    bins_per_drug: tuple[int, int] = (1, 3)
    stock: tuple[int, int] = (50, 200)
    order_count: int = 100
    k_range: tuple[int, int] = (2, 6)
    popularity: str = "uniform"       # "uniform" or "zipf"
    zipf_s: float = 1.1
    dosage: tuple[int, int] = (1, 5)
    reserved_cells: tuple[tuple[int, int, int], ...] = ()  # keep I/O cells free

    def __post_init__(self):
        if self.drug_count < self.k_range[1]:
            raise GeneratorSpecError("drug_count must cover the largest order")
        if self.k_range[0] < 2:
            raise GeneratorSpecError("minimum order size is 2 drug lines")
        for lo, hi in (self.bins_per_drug, self.stock, self.k_range, self.dosage):
            if lo > hi or lo < 1:
                raise GeneratorSpecError("ranges must be 1 <= lo <= hi")
        if self.popularity not in ("uniform", "zipf"):
            raise GeneratorSpecError(f"unknown popularity law {self.popularity!r}")
        cells = self.rows * self.cols * self.sides - len(self.reserved_cells)
        if self.drug_count * self.bins_per_drug[1] > cells:
            raise GeneratorSpecError(
                f"up to {self.drug_count * self.bins_per_drug[1]} bins cannot fit "
                f"in {cells} free cells")


def generate_stream(spec: GeneratorSpec, seed: int) -> tuple[dict[str, Bin], list[Order]]:
    """Deterministic-per-seed inventory and order stream.

    Every generated order is feasible against the initial stock: dosages
    are drawn no larger than the best-stocked bin of the chosen drug.
    """
    rng = np.random.default_rng(seed)
    reserved = set(spec.reserved_cells)
    cells = [(s, r, c)
             for s in range(1, spec.sides + 1)
             for r in range(1, spec.rows + 1)
             for c in range(1, spec.cols + 1)
             if (s, r, c) not in reserved]
    perm = rng.permutation(len(cells))

    drug_ids = [f"D{i:04d}" for i in range(spec.drug_count)]
    bins: dict[str, Bin] = {}
    max_stock = {d: 0 for d in drug_ids}
    cell_cursor = 0
    bin_no = 0
    for d in drug_ids:
        n = int(rng.integers(spec.bins_per_drug[0], spec.bins_per_drug[1] + 1))
        for _ in range(n):
            s, r, c = cells[perm[cell_cursor]]
            cell_cursor += 1
            stock = int(rng.integers(spec.stock[0], spec.stock[1] + 1))
            b = Bin(f"B{bin_no:04d}", GridPosition(s, r, c), d, stock)
            bins[b.id] = b
            max_stock[d] = max(max_stock[d], stock)
            bin_no += 1

    if spec.popularity == "zipf":
        w = 1.0 / np.arange(1, spec.drug_count + 1, dtype=float) ** spec.zipf_s
        probs = w / w.sum()
    else:
        probs = None

    orders: list[Order] = []
    for n in range(spec.order_count):
        k = int(rng.integers(spec.k_range[0], spec.k_range[1] + 1))
        chosen = rng.choice(spec.drug_count, size=k, replace=False, p=probs)
        lines = []
        for di in chosen:
            d = drug_ids[int(di)]
            hi = min(spec.dosage[1], max_stock[d])
            lo = min(spec.dosage[0], hi)
            lines.append((d, int(rng.integers(lo, hi + 1))))
        orders.append(Order(f"O{n:04d}", n, tuple(lines)))
    return bins, orders


def apply_pick(bins: dict[str, Bin], bin_id: str, dosage: int) -> None:
    """Decrement a bin's stock in place (replaces the frozen Bin value)."""
    b = bins[bin_id]
    if b.stock < dosage:
        raise ValueError(f"bin {bin_id}: stock {b.stock} < dosage {dosage}")
    bins[bin_id] = replace(b, stock=b.stock - dosage)
