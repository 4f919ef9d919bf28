"""Discrete-event engine: integer microsecond clock, ordered queue, seeded streams."""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Any, Callable

MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

US_PER_MS = 1_000
US_PER_S = 1_000_000


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


@dataclass(order=True)
class Event:
    fire_at: int
    seq: int
    target: str = field(compare=False)
    action: Callable[[], Any] = field(compare=False, repr=False)


class Simulator:
    """Single-threaded event loop. Time is an int of microseconds."""

    def __init__(self) -> None:
        self._now = 0
        self._seq = 0
        self._queue: list[Event] = []
        self.fired = 0

    def now(self) -> int:
        return self._now

    def schedule(self, fire_at: int, target: str, action: Callable[[], Any]) -> int:
        if not isinstance(fire_at, int):
            raise TypeError(f"fire_at must be int microseconds, got {type(fire_at).__name__}")
        if fire_at < self._now:
            raise SchedulingError(f"cannot schedule at t={fire_at} before now={self._now}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._queue, Event(fire_at, seq, target, action))
        return seq

    def pending(self) -> int:
        return len(self._queue)

    def run_until(self, t_end: int) -> int:
        if t_end < self._now:
            raise SchedulingError(f"run_until({t_end}) is before now={self._now}")
        count = 0
        queue = self._queue
        while queue and queue[0].fire_at <= t_end:
            ev = heapq.heappop(queue)
            self._now = ev.fire_at
            ev.action()
            count += 1
        self._now = t_end
        self.fired += count
        return count


def mix64(z: int) -> int:
    """splitmix64 finalizer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def _fnv1a64(text: str) -> int:
    h = 0xCBF29CE484222325
    for b in text.encode("utf-8"):
        h = ((h ^ b) * 0x100000001B3) & MASK64
    return h


class RandomStream:
    """splitmix64 generator keyed by (master_seed, node, purpose).

    The derivation only hashes the origin triple, so creating streams in a
    different order never changes what any one stream produces.
    """

    def __init__(self, master_seed: int, node: str, purpose: str) -> None:
        self.origin = (master_seed, node, purpose)
        s = mix64((master_seed & MASK64) ^ 0x6A09E667F3BCC909)
        s = mix64(s ^ _fnv1a64(node))
        s = mix64(s ^ _fnv1a64(purpose))
        self.state = s

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & MASK64
        return mix64(self.state)

    def random(self) -> float:
        """Uniform float in [0, 1) with 53 bits of resolution."""
        return (self.next_u64() >> 11) * (1.0 / (1 << 53))

    def uniform(self, lo: float, hi: float) -> float:
        return lo + (hi - lo) * self.random()


def rng_stream(master_seed: int, node: str, purpose: str) -> RandomStream:
    return RandomStream(master_seed, node, purpose)
