"""Random Waypoint mobility inside a rectangular hall, plus radial distance bins."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

D1_RADIUS = 85.0
D2_RADIUS = 170.0
D3_RADIUS = 255.0

# bin-center radii used for fixed-distance ("ring") placements
RING_CENTERS = {"d1": 42.5, "d2": 127.5, "d3": 212.5}


class MobilityError(ValueError):
    pass


class DistanceBin(enum.Enum):
    D1 = "d1"
    D2 = "d2"
    D3 = "d3"
    OUT_OF_RANGE = "out_of_range"


BIN_ORDER = (DistanceBin.D1, DistanceBin.D2, DistanceBin.D3, DistanceBin.OUT_OF_RANGE)


def distance_bin(d_2d: float) -> DistanceBin:
    """Radial bin of a 2D distance; each bin includes its outer radius."""
    if d_2d < 0:
        raise MobilityError(f"d_2D must be >= 0, got {d_2d}")
    if d_2d <= D1_RADIUS:
        return DistanceBin.D1
    if d_2d <= D2_RADIUS:
        return DistanceBin.D2
    if d_2d <= D3_RADIUS:
        return DistanceBin.D3
    return DistanceBin.OUT_OF_RANGE


@dataclass(frozen=True)
class Position:
    x: float
    y: float
    z: float


def distances(ue: Position, gnb: Position) -> tuple[float, float]:
    d_2d = math.hypot(ue.x - gnb.x, ue.y - gnb.y)
    d_3d = math.hypot(d_2d, ue.z - gnb.z)
    return d_2d, d_3d


@dataclass(frozen=True)
class HallBounds:
    """Axis-aligned hall ``[x_min, x_max] x [y_min, y_max]``.

    ``max_distance`` optionally restricts waypoints to a disc around ``center``.
    """

    x_min: float
    x_max: float
    y_min: float
    y_max: float
    center: Position
    max_distance: float | None = None

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise MobilityError("hall bounds must have positive width and depth")
        if self.max_distance is not None and self.max_distance <= 0:
            raise MobilityError("max_distance must be > 0")
        if self.max_distance is not None:
            # nearest hall point to the center must lie inside the disc
            nx = min(max(self.center.x, self.x_min), self.x_max)
            ny = min(max(self.center.y, self.y_min), self.y_max)
            if math.hypot(nx - self.center.x, ny - self.center.y) > self.max_distance:
                raise MobilityError(
                    "no feasible waypoint: hall lies entirely beyond max_distance"
                )

    @classmethod
    def square(cls, side: float, center: Position, max_distance: float | None = None):
        h = side / 2.0
        return cls(center.x - h, center.x + h, center.y - h, center.y + h, center, max_distance)

    def contains(self, p: Position, tol: float = 1e-9) -> bool:
        inside = (self.x_min - tol <= p.x <= self.x_max + tol) and (
            self.y_min - tol <= p.y <= self.y_max + tol
        )
        if inside and self.max_distance is not None:
            inside = math.hypot(p.x - self.center.x, p.y - self.center.y) <= self.max_distance + tol
        return inside

    def draw_point(self, z: float, rng: np.random.Generator, max_tries: int = 10_000) -> Position:
        for _ in range(max_tries):
            x = self.x_min + (self.x_max - self.x_min) * rng.random()
            y = self.y_min + (self.y_max - self.y_min) * rng.random()
            p = Position(x, y, z)
            if self.max_distance is None or self.contains(p):
                return p
        raise MobilityError("could not draw a feasible waypoint; check max_distance")


@dataclass(frozen=True)
class WaypointState:
    current: Position
    target: Position
    speed: float
    pause_remaining: float = 0.0


@dataclass(frozen=True)
class SpeedRange:
    low: float = 0.2
    high: float = 1.5

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise MobilityError(f"invalid speed range [{self.low}, {self.high}]")

    def draw(self, rng: np.random.Generator) -> float:
        return self.low + (self.high - self.low) * rng.random()


def initial_state(
    bounds: HallBounds, z: float, speeds: SpeedRange, rng: np.random.Generator
) -> WaypointState:
    start = bounds.draw_point(z, rng)
    target = bounds.draw_point(z, rng)
    return WaypointState(current=start, target=target, speed=speeds.draw(rng))


def advance(
    state: WaypointState,
    dt: float,
    bounds: HallBounds,
    rng: np.random.Generator,
    speeds: SpeedRange = SpeedRange(),
    pause: float = 0.0,
) -> WaypointState:
    """Move along the waypoint path for ``dt`` seconds.

    Arriving at a target (exactly or mid-step) starts the pause; once the
    pause is over a new target and speed are drawn and the leftover time is
    spent moving toward it.
    """
    if not dt > 0:
        raise MobilityError(f"dt must be > 0, got {dt}")
    remaining = dt
    while True:
        if state.pause_remaining > 0:
            used = min(state.pause_remaining, remaining)
            state = replace(state, pause_remaining=state.pause_remaining - used)
            remaining -= used
            if state.pause_remaining > 0:
                return state
            state = replace(
                state, target=bounds.draw_point(state.current.z, rng), speed=speeds.draw(rng)
            )
            if remaining <= 0:
                return state
        cur, tgt = state.current, state.target
        dx, dy = tgt.x - cur.x, tgt.y - cur.y
        gap = math.hypot(dx, dy)
        step = state.speed * remaining
        if step < gap:
            f = step / gap
            return replace(state, current=Position(cur.x + dx * f, cur.y + dy * f, cur.z))
        remaining -= gap / state.speed if state.speed > 0 else remaining
        state = replace(state, current=tgt)
        if pause > 0:
            state = replace(state, pause_remaining=pause)
            if remaining <= 0:
                return state
            continue
        state = replace(state, target=bounds.draw_point(cur.z, rng), speed=speeds.draw(rng))
        if remaining <= 0:
            return state


def ring_position(gnb: Position, d_2d: float, h_ut: float) -> Position:
    """Static UE placement at a fixed 2D distance (+x direction from the gNB)."""
    if d_2d < 0:
        raise MobilityError(f"ring distance must be >= 0, got {d_2d}")
    return Position(gnb.x + d_2d, gnb.y, h_ut)


TRACE_COLUMNS = ("t_s", "x", "y", "z", "d_2d", "d_3d", "bin")


def trace_row(t_s: float, ue: Position, gnb: Position) -> tuple[str, ...]:
    d_2d, d_3d = distances(ue, gnb)
    return (
        f"{t_s:.6f}",
        f"{ue.x:.6f}",
        f"{ue.y:.6f}",
        f"{ue.z:.6f}",
        f"{d_2d:.6f}",
        f"{d_3d:.6f}",
        distance_bin(d_2d).value,
    )
