"""Analytic node trajectories: static, 3D random waypoint and circular orbit.

Positions are evaluated exactly at any integer-microsecond time; there is no
mobility tick. Random-waypoint legs are drawn lazily from a dedicated random
stream, so the leg sequence does not depend on when positions are queried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

from .core import US_PER_S, RandomStream


class MobilityError(ValueError):
    pass


class Position(NamedTuple):
    x: float
    y: float
    z: float


class Bounds(NamedTuple):
    lo: Position
    hi: Position

    def contains(self, p: Position, eps: float = 1e-9) -> bool:
        return all(l - eps <= c <= h + eps for l, c, h in zip(self.lo, p, self.hi))


def distance(a: Position, b: Position) -> float:
    return math.sqrt((a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2)


@dataclass(frozen=True)
class Static:
    position: Position


@dataclass(frozen=True)
class Leg:
    start: Position
    end: Position
    depart: int
    speed: float

    @property
    def arrival(self) -> int:
        d = distance(self.start, self.end)
        if d == 0.0:
            return self.depart
        return self.depart + max(1, round(d / self.speed * US_PER_S))


@dataclass(frozen=True)
class RandomWaypoint:
    bounds: Bounds
    v_min: float
    v_max: float
    pause: int  # microseconds
    leg: Leg
    start_time: int


@dataclass(frozen=True)
class CircularOrbit:
    center: Position
    radius: float
    angular_speed: float  # rad/s
    phase: float = 0.0
    t0: int = 0


MobilityState = Union[Static, RandomWaypoint, CircularOrbit]


def validate_waypoint_params(bounds: Bounds, v_min: float, v_max: float, pause: int) -> list[str]:
    errors = []
    if any(l > h for l, h in zip(bounds.lo, bounds.hi)):
        errors.append("bounds box is empty (lo > hi on some axis)")
    if bounds.lo.z < 0:
        errors.append("bounds box must have z >= 0")
    if v_min <= 0:
        errors.append("v_min must be > 0")
    if v_min > v_max:
        errors.append(f"v_min ({v_min}) > v_max ({v_max})")
    if pause < 0:
        errors.append("pause must be >= 0")
    return errors


def _draw_leg(start: Position, state_bounds: Bounds, v_min: float, v_max: float,
              rng: RandomStream, depart: int) -> Leg:
    # Fixed draw order: wx, wy, wz, speed.
    lo, hi = state_bounds
    wx = rng.uniform(lo.x, hi.x)
    wy = rng.uniform(lo.y, hi.y)
    wz = rng.uniform(lo.z, hi.z)
    speed = rng.uniform(v_min, v_max)
    return Leg(start, Position(wx, wy, wz), depart, speed)


def random_waypoint(bounds: Bounds, v_min: float, v_max: float, pause: int,
                    rng: RandomStream, start: Position | None = None,
                    t0: int = 0) -> RandomWaypoint:
    """Initial random-waypoint state; draws the start point when none is given."""
    errors = validate_waypoint_params(bounds, v_min, v_max, pause)
    if errors:
        raise MobilityError("; ".join(errors))
    if start is None:
        start = Position(rng.uniform(bounds.lo.x, bounds.hi.x),
                         rng.uniform(bounds.lo.y, bounds.hi.y),
                         rng.uniform(bounds.lo.z, bounds.hi.z))
    leg = _draw_leg(Position(*start), bounds, v_min, v_max, rng, t0)
    return RandomWaypoint(bounds, v_min, v_max, pause, leg, t0)


def next_leg(state: RandomWaypoint, rng: RandomStream, t: int) -> RandomWaypoint:
    if not isinstance(state, RandomWaypoint):
        raise MobilityError("next_leg only applies to random waypoint trajectories")
    depart = state.leg.arrival + state.pause
    if t < depart:
        raise MobilityError(f"leg not finished: t={t} < {depart}")
    leg = _draw_leg(state.leg.end, state.bounds, state.v_min, state.v_max, rng, depart)
    return RandomWaypoint(state.bounds, state.v_min, state.v_max, state.pause, leg,
                          state.start_time)


def position_at(state: MobilityState, t: int) -> Position:
    if isinstance(state, Static):
        return state.position
    if isinstance(state, RandomWaypoint):
        leg = state.leg
        if t < leg.depart:
            raise MobilityError(f"t={t} precedes active leg departure {leg.depart}")
        arrival = leg.arrival
        if t >= arrival:
            return leg.end
        f = (t - leg.depart) / (arrival - leg.depart)
        s, e = leg.start, leg.end
        return Position(s.x + (e.x - s.x) * f, s.y + (e.y - s.y) * f, s.z + (e.z - s.z) * f)
    if isinstance(state, CircularOrbit):
        if t < state.t0:
            raise MobilityError(f"t={t} precedes orbit start {state.t0}")
        theta = state.phase + state.angular_speed * (t - state.t0) / US_PER_S
        c = state.center
        return Position(c.x + state.radius * math.cos(theta),
                        c.y + state.radius * math.sin(theta), c.z)
    raise TypeError(f"unknown mobility state {state!r}")


def max_speed(state: MobilityState) -> float:
    if isinstance(state, RandomWaypoint):
        return state.v_max
    if isinstance(state, CircularOrbit):
        return abs(state.radius * state.angular_speed)
    return 0.0


class Trajectory:
    """Mutable holder that advances random-waypoint legs before each query."""

    def __init__(self, state: MobilityState, rng: RandomStream | None = None) -> None:
        self.state = state
        self.rng = rng
        self._last = None

    def at(self, t: int) -> Position:
        st = self.state
        if isinstance(st, RandomWaypoint):
            if t < st.start_time:
                raise MobilityError(f"t={t} precedes trajectory start {st.start_time}")
            if self._last is not None and t < self._last:
                raise MobilityError("trajectory queried backwards in time")
            while t > st.leg.arrival + st.pause:
                st = next_leg(st, self.rng, t)
            self.state = st
            self._last = t
        return position_at(st, t)
