"""Inventory/order data model, dataset files, and the synthetic generator."""
import dataclasses

import numpy as np
import pytest
from scipy.stats import chisquare

from addsim import (Bin, GeneratorSpec, GridPosition, InfeasibleOrderError,
                    TrailingState, build_instance, generate_stream,
                    load_dataset, write_dataset)
from addsim.catalog import DatasetError, GeneratorSpecError, Order, apply_pick
from addsim.scenario import default_generator


def bin_(bid, row, col, drug, stock=10, side=1):
    return Bin(id=bid, position=GridPosition(side, row, col), drug=drug, stock=stock)


# ---------------------------------------------------------------------------
# Value validation
# ---------------------------------------------------------------------------

def test_order_validation():
    with pytest.raises(ValueError):
        Order("o", 0, (("d1", 1),))                    # fewer than 2 lines
    with pytest.raises(ValueError):
        Order("o", 0, (("d1", 1), ("d1", 2)))          # duplicate drug
    with pytest.raises(ValueError):
        Order("o", 0, (("d1", 0), ("d2", 1)))          # zero dosage
    with pytest.raises(ValueError):
        Order("o", -1, (("d1", 1), ("d2", 1)))         # negative arrival
    o = Order("o", 3, (("d2", 1), ("d1", 2)))
    assert o.drugs == ("d2", "d1")


def test_trailing_state_validation():
    with pytest.raises(ValueError):
        TrailingState(((1, "b1"), (1, "b2")))          # two bins at one point
    ts = TrailingState(((2, "b9"), (1, "b3")))
    assert ts.bin_at(1) == "b3" and ts.bin_at(2) == "b9" and ts.bin_at(3) is None
    assert len(ts) == 2


def test_negative_stock_rejected():
    with pytest.raises(ValueError):
        bin_("b1", 1, 1, "d1", stock=-1)


# ---------------------------------------------------------------------------
# Instance assembly
# ---------------------------------------------------------------------------

def test_candidate_sets_sorted_and_filtered_by_stock():
    inv = [bin_("b3", 1, 1, "d1", stock=5), bin_("b1", 2, 2, "d1", stock=2),
           bin_("b2", 3, 3, "d2", stock=9)]
    order = Order("o1", 0, (("d1", 3), ("d2", 1)))
    inst = build_instance(order, inv, TrailingState(), "A")
    assert [b.id for b in inst.candidate_sets["d1"]] == ["b3"]  # b1 understocked
    assert [b.id for b in inst.candidate_sets["d2"]] == ["b2"]
    assert inst.routed_lines == (("d1", 3), ("d2", 1))
    assert inst.node_set == ("b2", "b3")


def test_overlap_when_trailing_bin_covers_a_line():
    inv = [bin_("b1", 1, 1, "d1"), bin_("b2", 2, 2, "d2"), bin_("b3", 3, 3, "d1")]
    order = Order("o1", 0, (("d1", 2), ("d2", 1)))
    inst = build_instance(order, inv, TrailingState(((2, "b3"),)), "A")
    assert inst.overlap_flags == {"d1": 2}
    assert inst.routed_lines == (("d2", 1),)


def test_no_overlap_when_trailing_stock_insufficient():
    inv = [bin_("b1", 1, 1, "d1"), bin_("b2", 2, 2, "d2"),
           bin_("b3", 3, 3, "d1", stock=1)]
    order = Order("o1", 0, (("d1", 2), ("d2", 1)))
    inst = build_instance(order, inv, TrailingState(((1, "b3"),)), "A")
    assert inst.overlap_flags == {}
    assert len(inst.routed_lines) == 2


def test_infeasible_line_raises():
    inv = [bin_("b1", 1, 1, "d1", stock=1), bin_("b2", 2, 2, "d2")]
    order = Order("o1", 0, (("d1", 5), ("d2", 1)))
    with pytest.raises(InfeasibleOrderError) as e:
        build_instance(order, inv, TrailingState(), "A")
    assert "d1" in str(e.value)


def test_trailing_count_per_layout():
    inv = [bin_("b1", 1, 1, "d1"), bin_("b2", 2, 2, "d2"), bin_("b3", 3, 3, "t")]
    order = Order("o1", 0, (("d1", 1), ("d2", 1)))
    trailing = TrailingState(((1, "b3"), (2, "b1")))
    build_instance(order, inv, trailing, "A")  # fine with two points
    with pytest.raises(ValueError):
        build_instance(order, inv, trailing, "B")
    with pytest.raises(DatasetError):
        build_instance(order, inv, TrailingState(((1, "ghost"),)), "A")


def test_apply_pick():
    bins = {"b1": bin_("b1", 1, 1, "d1", stock=5)}
    apply_pick(bins, "b1", 3)
    assert bins["b1"].stock == 2
    with pytest.raises(ValueError):
        apply_pick(bins, "b1", 3)


# ---------------------------------------------------------------------------
# Dataset files
# ---------------------------------------------------------------------------

def test_dataset_round_trip(tmp_path, rack_a):
    spec = dataclasses.replace(default_generator(rack_a), order_count=12)
    bins, orders = generate_stream(spec, 5)
    inv, ords = tmp_path / "inv.csv", tmp_path / "ord.csv"
    write_dataset(bins, orders, inv, ords)
    bins2, orders2 = load_dataset(inv, ords, rack_a)
    assert bins2 == bins
    assert sorted(orders2, key=lambda o: o.id) == sorted(orders, key=lambda o: o.id)
    # byte-identical on rewrite
    inv2, ords2 = tmp_path / "inv2.csv", tmp_path / "ord2.csv"
    write_dataset(bins2, orders2, inv2, ords2)
    assert inv2.read_bytes() == inv.read_bytes()
    assert ords2.read_bytes() == ords.read_bytes()


def _write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


GOOD_ORDERS = "order_id,arrival_index,line_index,drug_id,dosage\no1,0,0,d1,1\no1,0,1,d2,1\n"


def test_dataset_errors_carry_line_numbers(tmp_path, rack_a):
    ords = _write(tmp_path, "ord.csv", GOOD_ORDERS)
    inv = _write(tmp_path, "inv.csv",
                 "bin_id,side,row,col,drug_id,stock\nb1,1,1,1,d1,5\nb2,1,99,1,d2,5\n")
    with pytest.raises(DatasetError, match="3"):   # bad row on line 3
        load_dataset(inv, ords, rack_a)

    inv = _write(tmp_path, "inv.csv",
                 "bin_id,side,row,col,drug_id,stock\nb1,1,1,1,d1,5\nb2,1,1,1,d2,5\n")
    with pytest.raises(DatasetError, match="cell"):  # duplicate cell
        load_dataset(inv, ords, rack_a)

    inv = _write(tmp_path, "inv.csv", "wrong,header\n")
    with pytest.raises(DatasetError, match="header"):
        load_dataset(inv, ords, rack_a)

    inv = _write(tmp_path, "inv.csv",
                 "bin_id,side,row,col,drug_id,stock\nb1,1,1,1,d1,5\n")
    bad = _write(tmp_path, "bad.csv",
                 GOOD_ORDERS.replace("d2", "dX"))
    with pytest.raises(DatasetError, match="dX"):   # unknown drug
        load_dataset(inv, bad, rack_a)


# ---------------------------------------------------------------------------
# Synthetic generator
# ---------------------------------------------------------------------------

def test_generator_spec_validation():
    with pytest.raises(GeneratorSpecError):
        GeneratorSpec(drug_count=3, k_range=(2, 6))           # too few drugs
    with pytest.raises(GeneratorSpecError):
        GeneratorSpec(k_range=(1, 4))                         # orders below 2 lines
    with pytest.raises(GeneratorSpecError):
        GeneratorSpec(stock=(10, 5))                          # inverted range
    with pytest.raises(GeneratorSpecError):
        GeneratorSpec(popularity="bogus")
    with pytest.raises(GeneratorSpecError):
        GeneratorSpec(rows=2, cols=2, sides=1, drug_count=5, bins_per_drug=(3, 3))


def test_generate_stream_deterministic_and_feasible(rack_a):
    spec = dataclasses.replace(default_generator(rack_a), order_count=40)
    b1, o1 = generate_stream(spec, 11)
    b2, o2 = generate_stream(spec, 11)
    assert b1 == b2 and o1 == o2
    b3, o3 = generate_stream(spec, 12)
    assert o3 != o1
    # every line is coverable by some bin
    for order in o1:
        for drug, q in order.lines:
            assert any(b.drug == drug and b.stock >= q for b in b1.values())
    # I/O cells stay free
    for b in b1.values():
        assert (b.position.row, b.position.col) not in ((10, 9), (10, 10))
    sizes = [len(o.lines) for o in o1]
    assert min(sizes) >= spec.k_range[0] and max(sizes) <= spec.k_range[1]


def test_order_size_uniformity(rack_a):
    spec = dataclasses.replace(default_generator(rack_a), order_count=10_000)
    _, orders = generate_stream(spec, 99)
    lo, hi = spec.k_range
    counts = np.bincount([len(o.lines) for o in orders], minlength=hi + 1)[lo:hi + 1]
    assert counts.sum() == 10_000
    _, p = chisquare(counts)
    assert p > 0.01


def test_zipf_popularity_skews_demand(rack_a):
    spec = dataclasses.replace(default_generator(rack_a), order_count=2000,
                               popularity="zipf", zipf_s=1.5)
    _, orders = generate_stream(spec, 3)
    freq = {}
    for o in orders:
        for d, _ in o.lines:
            freq[d] = freq.get(d, 0) + 1
    top = sorted(freq.values(), reverse=True)
    # the most popular drug dominates the median one by a wide margin
    assert top[0] > 4 * sorted(freq.values())[len(freq) // 2]
