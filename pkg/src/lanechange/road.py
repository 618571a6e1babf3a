"""Road geometry and per-vehicle kinematic records."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class RoadGeometry:
    """A straight multi-lane segment; ``y`` is measured from the right edge, increasing leftward."""

    n_lanes: int = 3
    segment_length: float = 1000.0
    lane_width: float = 3.75
    curvature: float = 0.0

    def __post_init__(self):
        if self.n_lanes < 2:
            raise ValueError("need at least two lanes")
        if not (self.lane_width > 0 and self.segment_length > 0):
            raise ValueError("lane_width and segment_length must be positive")

    @property
    def width(self) -> float:
        return self.n_lanes * self.lane_width

    def lane_center(self, lane_index: int) -> float:
        return lane_center(self, lane_index)

    def lane_of(self, y: float) -> int:
        """Lane whose band contains ``y`` (edges clipped to the outer lanes)."""
        return min(self.n_lanes - 1, max(0, int(math.floor(y / self.lane_width))))


def lane_center(road: RoadGeometry, lane_index: int) -> float:
    if not 0 <= lane_index < road.n_lanes:
        raise IndexError(f"lane {lane_index} outside 0..{road.n_lanes - 1}")
    return (lane_index + 0.5) * road.lane_width


@dataclass(slots=True)
class VehicleState:
    vid: int
    lane_index: int
    x: float
    y: float
    v: float
    a: float = 0.0
    theta: float = 0.0
    omega: float = 0.0
    length: float = 5.0
    v_limit: float = 30.0

    @property
    def rear(self) -> float:
        return self.x - self.length
