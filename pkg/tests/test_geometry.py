"""Rack geometry and crane travel times."""
import pytest
from hypothesis import given
from hypothesis import strategies as st

from addsim import GridPosition, RackConfig, dual_command_time, leg_time, paper_rack
from addsim.geometry import BoundsError

cells = st.builds(GridPosition, side=st.sampled_from([1, 2]),
                  row=st.integers(1, 17), col=st.integers(1, 17))


def test_leg_time_reference_value(rack_a):
    # max(9 * 0.275, 8 * 0.168) / 0.1486, frozen from an independent
    # hand evaluation of the travel formula
    t = leg_time(GridPosition(1, 10, 9), GridPosition(1, 1, 1), rack_a)
    assert t == pytest.approx(16.65545087483176, abs=1e-12)


def test_dual_command_reference_value(rack_a):
    t = dual_command_time(GridPosition(1, 10, 9), GridPosition(1, 12, 12),
                          GridPosition(1, 5, 5), rack_a)
    assert t == pytest.approx(25.908479138627186, abs=1e-12)


def test_same_cell_leg_is_zero(rack_a):
    p = GridPosition(1, 5, 5)
    assert leg_time(p, p, rack_a) == 0.0


def test_side_does_not_affect_travel(rack_a):
    a, b = GridPosition(1, 2, 3), GridPosition(1, 9, 14)
    a2, b2 = GridPosition(2, 2, 3), GridPosition(2, 9, 14)
    assert leg_time(a, b, rack_a) == leg_time(a2, b2, rack_a)


@given(a=cells, b=cells)
def test_leg_symmetry(a, b):
    rack = paper_rack("A")
    assert leg_time(a, b, rack) == leg_time(b, a, rack)


@given(a=cells, b=cells, c=cells)
def test_leg_triangle_inequality(a, b, c):
    rack = paper_rack("A")
    assert leg_time(a, c, rack) <= leg_time(a, b, rack) + leg_time(b, c, rack) + 1e-12


@given(o=cells, i=cells, j=cells)
def test_dual_command_is_sum_of_legs(o, i, j):
    rack = paper_rack("A")
    expect = leg_time(o, i, rack) + leg_time(i, j, rack) + leg_time(j, o, rack)
    assert dual_command_time(o, i, j, rack) == pytest.approx(expect, abs=1e-12)


def test_preset_layouts():
    a, b = paper_rack("A"), paper_rack("B")
    assert len(a.io_points) == 2 and a.layout == "A"
    assert len(b.io_points) == 1 and b.layout == "B"
    assert b.io_points == a.io_points[:1]
    assert a.rows == a.cols == 17


def test_out_of_bounds_rejected(rack_a):
    with pytest.raises(BoundsError):
        leg_time(GridPosition(1, 18, 1), GridPosition(1, 1, 1), rack_a)
    with pytest.raises(BoundsError):
        rack_a.check(GridPosition(1, 1, 0))


def test_bad_side_rejected():
    with pytest.raises(ValueError):
        GridPosition(3, 1, 1)


def test_rack_validation():
    io = (GridPosition(1, 1, 1),)
    with pytest.raises(ValueError):
        RackConfig(rows=0, cols=5, cell_height=1, cell_length=1, speed=1, io_points=io)
    with pytest.raises(ValueError):
        RackConfig(rows=5, cols=5, cell_height=0, cell_length=1, speed=1, io_points=io)
    with pytest.raises(ValueError):
        RackConfig(rows=5, cols=5, cell_height=1, cell_length=1, speed=-1, io_points=io)
    with pytest.raises(ValueError):
        RackConfig(rows=5, cols=5, cell_height=1, cell_length=1, speed=1, io_points=())
    with pytest.raises(ValueError):
        RackConfig(rows=5, cols=5, cell_height=1, cell_length=1, speed=1,
                   io_points=(GridPosition(1, 1, 1),) * 3)
    with pytest.raises(BoundsError):
        RackConfig(rows=5, cols=5, cell_height=1, cell_length=1, speed=1,
                   io_points=(GridPosition(1, 6, 1),))
