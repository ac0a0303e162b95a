"""Rack coordinate model and crane travel times.

The crane moves simultaneously in both axes at constant speed, so a single
leg between two cells takes the Chebyshev-style time
max(row_distance * cell_height, col_distance * cell_length) / speed.
A dual-command route O -> i -> j -> O is the sum of its three legs.
"""
from __future__ import annotations

from dataclasses import dataclass, field


class BoundsError(ValueError):
    """A grid position lies outside the rack."""


@dataclass(frozen=True, order=True)
class GridPosition:
    """A storage cell: side is carried as metadata only, timing ignores it."""
    side: int
    row: int
    col: int

    def __post_init__(self):
        if self.side not in (1, 2):
            raise ValueError(f"side must be 1 or 2, got {self.side}")


@dataclass(frozen=True)
class RackConfig:
    rows: int
    cols: int
    cell_height: float  # meters, vertical pitch
    cell_length: float  # meters, horizontal pitch
    speed: float        # meters/second
    io_points: tuple[GridPosition, ...] = field(default=())

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ValueError("rack must have at least one row and one column")
        if self.cell_height <= 0 or self.cell_length <= 0:
            raise ValueError("cell dimensions must be positive")
        if self.speed <= 0:
            raise ValueError("speed must be positive")
        if len(self.io_points) not in (1, 2):
            raise ValueError("io_points must contain 1 (layout B) or 2 (layout A) positions")
        for p in self.io_points:
            if not self.contains(p):
                raise BoundsError(f"I/O point {p} outside {self.rows}x{self.cols} rack")

    def contains(self, p: GridPosition) -> bool:
        return 1 <= p.row <= self.rows and 1 <= p.col <= self.cols

    def check(self, p: GridPosition) -> None:
        if not self.contains(p):
            raise BoundsError(f"position {p} outside {self.rows}x{self.cols} rack")

    @property
    def layout(self) -> str:
        return "A" if len(self.io_points) == 2 else "B"


def paper_rack(layout: str = "A") -> RackConfig:
    """The `paper-5` preset: 17x17 rack, I/O at (10,9) and (10,10) on side 1."""
    io = (GridPosition(1, 10, 9), GridPosition(1, 10, 10))
    if layout.upper() == "B":
        io = io[:1]
    return RackConfig(rows=17, cols=17, cell_height=0.275, cell_length=0.168,
                      speed=0.1486, io_points=io)


def leg_time(a: GridPosition, b: GridPosition, cfg: RackConfig) -> float:
    """Travel time for one leg a -> b, in seconds."""
    cfg.check(a)
    cfg.check(b)
    return max(abs(a.row - b.row) * cfg.cell_height,
               abs(a.col - b.col) * cfg.cell_length) / cfg.speed


def dual_command_time(o: GridPosition, i: GridPosition, j: GridPosition,
                      cfg: RackConfig) -> float:
    """Travel time of the dual-command route o -> i -> j -> o, in seconds."""
    return leg_time(o, i, cfg) + leg_time(i, j, cfg) + leg_time(j, o, cfg)
