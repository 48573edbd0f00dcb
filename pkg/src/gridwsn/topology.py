"""Rank arithmetic for the nearest-neighbour sensor grid.

Rank 0 is the base station. Sensor ranks ``1 .. width*height`` are laid
out row-major, so rank ``r`` sits at row ``(r - 1) // width`` and column
``(r - 1) % width``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional

from .errors import ConfigurationError, DomainError

BASE_RANK = 0
SLOTS = ("left", "right", "top", "bottom")


@dataclass(frozen=True)
class GridConfig:
    width: int = 4
    height: int = 5

    def __post_init__(self):
        if self.width < 2 or self.height < 2:
            raise ConfigurationError(
                f"grid must be at least 2x2, got {self.width}x{self.height}"
            )

    @property
    def sensor_count(self) -> int:
        return self.width * self.height

    @property
    def process_count(self) -> int:
        return self.sensor_count + 1

    def sensor_ranks(self) -> range:
        return range(1, self.sensor_count + 1)


class GridPosition(NamedTuple):
    row_index: int
    column_index: int


class NeighborSet(NamedTuple):
    """Adjacent ranks in (left, right, top, bottom) order; ``None`` if absent."""

    left: Optional[int]
    right: Optional[int]
    top: Optional[int]
    bottom: Optional[int]

    def present(self) -> list[int]:
        return [r for r in self if r is not None]

    def slots(self) -> Iterator[tuple[int, Optional[int]]]:
        """Yield ``(slot_index, rank)`` pairs, including absent slots."""
        return iter(enumerate(self))


def _check_sensor_rank(rank: int, config: GridConfig) -> None:
    if not 1 <= rank <= config.sensor_count:
        raise DomainError(
            f"rank {rank} is not a sensor rank of a "
            f"{config.width}x{config.height} grid (valid: 1..{config.sensor_count})"
        )


def position_of(rank: int, config: GridConfig) -> GridPosition:
    _check_sensor_rank(rank, config)
    return GridPosition((rank - 1) // config.width, (rank - 1) % config.width)


def rank_at(row_index: int, column_index: int, config: GridConfig) -> int:
    return row_index * config.width + column_index + 1


def neighbors_of(rank: int, config: GridConfig) -> NeighborSet:
    row, col = position_of(rank, config)
    w = config.width
    left = row * w + col if col > 0 else None
    right = row * w + col + 2 if col < w - 1 else None
    top = (row - 1) * w + col + 1 if row > 0 else None
    bottom = (row + 1) * w + col + 1 if row < config.height - 1 else None
    return NeighborSet(left, right, top, bottom)


def neighbor_count(rank: int, config: GridConfig) -> int:
    return len(neighbors_of(rank, config).present())


def classify(rank: int, config: GridConfig) -> str:
    """Return ``"corner"``, ``"edge"`` or ``"interior"``."""
    return {2: "corner", 3: "edge", 4: "interior"}[neighbor_count(rank, config)]


def directed_edge_count(config: GridConfig) -> int:
    """Number of ordered (sender, receiver) neighbour pairs in the grid."""
    w, h = config.width, config.height
    return 2 * (h * (w - 1) + w * (h - 1))


def validate_layout(config: GridConfig, process_count: int) -> None:
    expected = config.process_count
    if process_count != expected:
        raise ConfigurationError(
            f"a {config.width}x{config.height} grid needs {expected} processes "
            f"({config.sensor_count} sensors + 1 base station), got {process_count}"
        )


def render_grid(config: GridConfig) -> str:
    """Row-major picture of the sensor ranks, one grid row per line."""
    cell = len(str(config.sensor_count))
    lines = []
    for row in range(config.height):
        ranks = (rank_at(row, col, config) for col in range(config.width))
        lines.append(" ".join(f"{r:>{cell}}" for r in ranks))
    return "\n".join(lines)
