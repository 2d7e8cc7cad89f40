"""Deterministic discrete-event kernel: TTI clock, event queue, named RNG streams.

One simulation run is strictly single-threaded; everything here is owned by
the run that created it.  Time is an integer count of TTIs (1 TTI = 1 ms).
"""

from __future__ import annotations

import hashlib
import heapq
from typing import Callable

import numpy as np


class SchedulingError(Exception):
    """Raised when an event is scheduled in the past."""


class SimClock:
    """Monotone millisecond clock at TTI resolution."""

    __slots__ = ("now",)

    def __init__(self) -> None:
        self.now = 0

    def advance(self, t: int) -> None:
        if t < self.now:
            raise SchedulingError(f"clock regression: {t} < {self.now}")
        self.now = t


class EventQueue:
    """Priority queue of (time, insertion order) -> callback.

    Events at equal times fire in FIFO (insertion) order, which makes the
    whole run a pure function of the scenario and seed.
    """

    def __init__(self, clock: SimClock) -> None:
        self.clock = clock
        self._heap: list[tuple[int, int, Callable[[], None]]] = []
        self._seq = 0

    def schedule(self, time: int, fn: Callable[[], None]) -> tuple[int, int]:
        if time < self.clock.now:
            raise SchedulingError(
                f"cannot schedule at t={time}: clock is at {self.clock.now}"
            )
        handle = (time, self._seq)
        heapq.heappush(self._heap, (time, self._seq, fn))
        self._seq += 1
        return handle

    def schedule_in(self, delay: int, fn: Callable[[], None]) -> tuple[int, int]:
        return self.schedule(self.clock.now + delay, fn)

    def __len__(self) -> int:
        return len(self._heap)

    def run(self, until: int | None = None) -> None:
        """Pop and execute events until the queue drains (or `until` is passed)."""
        while self._heap:
            t, _, fn = self._heap[0]
            if until is not None and t > until:
                break
            heapq.heappop(self._heap)
            self.clock.advance(t)
            fn()


def _derive_seed(master_seed: int, name: str) -> int:
    # Platform-independent: never use the builtin hash() here.
    digest = hashlib.sha256(f"{master_seed}/{name}".encode()).digest()
    return int.from_bytes(digest[:8], "little")


class RngStreams:
    """Named, mutually independent random streams derived from one master seed.

    Identical (master seed, name) always yields the identical draw sequence,
    regardless of what other streams were used in between.
    """

    def __init__(self, master_seed: int) -> None:
        self.master_seed = master_seed
        self._streams: dict[str, np.random.Generator] = {}

    def stream(self, name: str) -> np.random.Generator:
        gen = self._streams.get(name)
        if gen is None:
            gen = np.random.default_rng(np.random.SeedSequence(_derive_seed(self.master_seed, name)))
            self._streams[name] = gen
        return gen

    def value(self, name: str) -> float:
        """One standard-normal draw that is a pure function of (seed, name).

        Used for quantities frozen per link for the whole run (shadowing,
        LOS-probability draws): the value does not depend on query order.
        """
        gen = np.random.default_rng(np.random.SeedSequence(_derive_seed(self.master_seed, name)))
        return float(gen.standard_normal())

    def uniform(self, name: str) -> float:
        gen = np.random.default_rng(np.random.SeedSequence(_derive_seed(self.master_seed, name)))
        return float(gen.random())
