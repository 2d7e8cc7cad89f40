"""Resource grids and schedulers: dynamic SR/DCI chain, SPS, sidelink modes.

One ResourceGrid models one carrier's RB-by-TTI plane.  Exclusive owners
come from one-shot allocations (dynamic grants, HARQ retransmissions) and
periodic reservations (SPS).  Mode-4 autonomous selections are deliberately
NOT owners: they land in a side ledger where overlaps are legal and later
scored as interference.

Delay chain for dynamic scheduling: a scheduling request fires at the next
SR opportunity (every sr_period_ms, at the period's last TTI), the grant is
issued bs_proc_ms later, and data starts grant_gap_ms after that, deferred
TTI by TTI under congestion.  Semi-persistent grants recur exactly every
period; admission walks forward from the requested phase until a TTI with
spare periodic capacity is found, so a grant stays aligned to its packet
cadence up to a constant offset.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .engine import EventQueue


@dataclass
class Alloc:
    tti: int
    rb_lo: int
    rb_count: int
    owner: object
    purpose: str

    @property
    def rb_hi(self) -> int:  # exclusive
        return self.rb_lo + self.rb_count


@dataclass
class Reservation:
    phase: int        # first occurrence TTI; recurs at phase + k*period
    period: int
    rb_lo: int
    rb_count: int
    owner: object
    purpose: str

    def active_at(self, tti: int) -> bool:
        return tti >= self.phase and (tti - self.phase) % self.period == 0

    def next_occurrence(self, tti: int) -> int:
        if tti <= self.phase:
            return self.phase
        return tti + (self.phase - tti) % self.period


@dataclass
class Grant:
    kind: str                 # "dynamic" | "sps"
    carrier: str
    rb_lo: int
    rb_count: int
    start: int
    owner: object
    period: int | None = None

    def next_occurrence(self, tti: int) -> int:
        if self.period is None or tti <= self.start:
            return self.start
        return tti + (self.start - tti) % self.period


class ResourceGrid:
    """Allocation plane of one carrier: n_rbs per TTI."""

    def __init__(self, carrier: str, n_rbs: int):
        self.carrier = carrier
        self.n_rbs = n_rbs
        self._slots: dict[int, list[Alloc]] = {}
        self._reservations: list[Reservation] = []
        self._overlap_ledger: dict[int, list[Alloc]] = {}
        self._period: int | None = None  # all reservations share one period

    # -- occupancy ---------------------------------------------------------

    def _exclusive_at(self, tti: int) -> list[Alloc]:
        out = list(self._slots.get(tti, ()))
        for r in self._reservations:
            if r.active_at(tti):
                out.append(Alloc(tti, r.rb_lo, r.rb_count, r.owner, r.purpose))
        return out

    def allocs_at(self, tti: int) -> list[Alloc]:
        return self._exclusive_at(tti) + list(self._overlap_ledger.get(tti, ()))

    def free_rbs(self, tti: int) -> int:
        return self.n_rbs - sum(a.rb_count for a in self._exclusive_at(tti))

    def free_gap(self, tti: int, need: int) -> int | None:
        """First-fit contiguous gap of `need` RBs, or None."""
        spans = sorted((a.rb_lo, a.rb_hi) for a in self._exclusive_at(tti))
        cursor = 0
        for lo, hi in spans:
            if lo - cursor >= need:
                return cursor
            cursor = max(cursor, hi)
        return cursor if self.n_rbs - cursor >= need else None

    # -- one-shot allocations ------------------------------------------------

    def allocate(self, tti: int, need: int, owner, purpose: str) -> Alloc | None:
        lo = self.free_gap(tti, need)
        if lo is None:
            return None
        a = Alloc(tti, lo, need, owner, purpose)
        self._slots.setdefault(tti, []).append(a)
        return a

    def allocate_at(self, tti: int, rb_lo: int, need: int, owner,
                    purpose: str) -> Alloc | None:
        """Allocate a specific RB window, or None if any of it is taken."""
        for a in self._exclusive_at(tti):
            if min(a.rb_hi, rb_lo + need) > max(a.rb_lo, rb_lo):
                return None
        if rb_lo < 0 or rb_lo + need > self.n_rbs:
            return None
        a = Alloc(tti, rb_lo, need, owner, purpose)
        self._slots.setdefault(tti, []).append(a)
        return a

    def allocate_from(self, tti: int, need: int, owner, purpose: str,
                      deadline: int | None = None) -> Alloc | None:
        """Allocate at the first TTI >= tti with room (congestion queuing)."""
        t = tti
        while deadline is None or t <= deadline:
            a = self.allocate(t, need, owner, purpose)
            if a is not None:
                return a
            t += 1
        return None

    # -- periodic reservations (SPS) -----------------------------------------

    def reserve_periodic(self, phase: int, period: int, need: int,
                         owner, purpose: str) -> Reservation | None:
        if self._period is not None and period != self._period:
            raise ValueError("one grid carries a single reservation period")
        taken = sorted((r.rb_lo, r.rb_lo + r.rb_count) for r in self._reservations
                       if (r.phase - phase) % period == 0)
        cursor = 0
        lo = None
        for s, e in taken:
            if s - cursor >= need:
                lo = cursor
                break
            cursor = max(cursor, e)
        if lo is None:
            lo = cursor if self.n_rbs - cursor >= need else None
        if lo is None:
            return None
        self._period = period
        r = Reservation(phase, period, lo, need, owner, purpose)
        self._reservations.append(r)
        return r

    # -- mode-4 ledger ---------------------------------------------------------

    def add_overlap(self, tti: int, rb_lo: int, need: int, owner, purpose: str) -> Alloc:
        a = Alloc(tti, rb_lo, need, owner, purpose)
        self._overlap_ledger.setdefault(tti, []).append(a)
        return a

    def overlaps_at(self, tti: int) -> list[Alloc]:
        return list(self._overlap_ledger.get(tti, ()))

    # -- housekeeping -----------------------------------------------------------

    def purge_before(self, tti: int) -> None:
        for store in (self._slots, self._overlap_ledger):
            for t in [t for t in store if t < tti]:
                del store[t]


def overlap_fraction(a_lo: int, a_count: int, b_lo: int, b_count: int) -> float:
    """Fraction of allocation A's RBs also used by B."""
    inter = min(a_lo + a_count, b_lo + b_count) - max(a_lo, b_lo)
    return max(0, inter) / a_count if a_count else 0.0


class UplinkScheduler:
    """Dynamic SR/DCI chain and SPS admission on the uplink grid."""

    def __init__(self, grid: ResourceGrid, sr_period_ms: int = 5, bs_proc_ms: int = 3,
                 grant_gap_ms: int = 3):
        self.grid = grid
        self.sr_period = sr_period_ms
        self.bs_proc = bs_proc_ms
        self.grant_gap = grant_gap_ms
        self.sr_events: list[tuple[int, object]] = []

    def next_sr_opportunity(self, now: int) -> int:
        # opportunities sit on the last TTI of each SR period: P-1, 2P-1, ...
        return now + (self.sr_period - 1 - now) % self.sr_period

    def dynamic_request(self, ue, now: int, rb_need: int,
                        deadline: int | None = None) -> tuple[Alloc | None, dict]:
        sr = self.next_sr_opportunity(now)
        self.sr_events.append((sr, ue))
        target = sr + self.bs_proc + self.grant_gap
        alloc = self.grid.allocate_from(target, rb_need, ue, "ul-dyn", deadline)
        trace = {"sr": sr, "grant": sr + self.bs_proc, "target": target,
                 "data": alloc.tti if alloc else None}
        return alloc, trace

    def sps_configure(self, ue, phase: int, period: int, rb_need: int) -> Grant | None:
        """Periodic grant at the packet phase, shifted forward to free capacity."""
        if rb_need > self.grid.n_rbs:
            return None
        for j in range(period):
            r = self.grid.reserve_periodic((phase + j) % period, period, rb_need,
                                           ue, "ul-sps")
            if r is not None:
                return Grant("sps", self.grid.carrier, r.rb_lo, r.rb_count,
                             r.phase, ue, period)
        return None


@dataclass
class SidelinkPool:
    """Portion of the PC5 grid open to mode-4 autonomous selection."""

    n_rbs: int
    rb_lo: int = 0
    rb_hi: int | None = None  # exclusive; None = full width

    def block_starts(self, need: int) -> list[int]:
        hi = self.n_rbs if self.rb_hi is None else self.rb_hi
        return list(range(self.rb_lo, hi - need + 1, need))


class SelectionError(Exception):
    """Mode-4 selection impossible (empty pool or oversized block)."""


def mode4_select(ue, pool: SidelinkPool, rb_need: int, rng: np.random.Generator,
                 now: int, window_ms: int, reps: int = 1,
                 last_tti: int | None = None) -> list[tuple[int, int]]:
    """Uniform (TTI, RB-block) picks in (now, now+window]; distinct TTIs per copy.

    Collisions with other UEs' picks are legal and surface as interference.
    """
    starts = pool.block_starts(rb_need)
    if not starts:
        raise SelectionError(f"no {rb_need}-RB block fits the pool")
    lo, hi = now + 1, now + window_ms
    if last_tti is not None:
        hi = min(hi, last_tti)
    ttis = np.arange(lo, hi + 1)
    if ttis.size == 0:
        raise SelectionError("empty selection window")
    k = min(reps, ttis.size)
    chosen = rng.choice(ttis, size=k, replace=False)
    blocks = rng.integers(0, len(starts), size=k)
    return sorted((int(t), starts[int(b)]) for t, b in zip(chosen, blocks))


class SidelinkMac:
    """Mode-3 (network-scheduled, collision-free) bookkeeping on the PC5 grid."""

    def __init__(self, grid: ResourceGrid, sr_period_ms: int = 5, bs_proc_ms: int = 3,
                 grant_gap_ms: int = 3):
        self.grid = grid
        self.sched = UplinkScheduler(grid, sr_period_ms, bs_proc_ms, grant_gap_ms)

    @property
    def sr_events(self) -> list:
        return self.sched.sr_events

    def mode3_request(self, ue, now: int, rb_need: int, reps: int,
                      deadline: int | None = None) -> tuple[list[Alloc], dict]:
        """Dynamic mode-3 grant: SR chain, then consecutive-copy allocations."""
        first, trace = self.sched.dynamic_request(ue, now, rb_need, deadline)
        if first is None:
            return [], trace
        allocs = [first]
        for _ in range(reps - 1):
            nxt = self.grid.allocate_from(allocs[-1].tti + 1, rb_need, ue, "sl-rep", deadline)
            if nxt is None:
                break  # best effort: fewer copies under congestion
            allocs.append(nxt)
        return allocs, trace

    def sps_configure(self, ue, phase: int, period: int, rb_need: int,
                      reps: int) -> list[Reservation]:
        """Periodic copy slots at consecutive phases; best-effort beyond copy one."""
        first = None
        for j in range(period):
            first = self.grid.reserve_periodic((phase + j) % period, period, rb_need,
                                               ue, "sl-sps")
            if first is not None:
                break
        if first is None:
            return []
        out = [first]
        for r in range(1, reps):
            extra = self.grid.reserve_periodic((first.phase + r) % period, period,
                                               rb_need, ue, "sl-sps-rep")
            if extra is not None:
                out.append(extra)
        return out


@dataclass
class DlItem:
    ready: int
    seq: int
    kind: str            # "mc" | "uc"
    sectors: tuple       # target sector ids
    rb_need: int
    deadline: int
    on_tx: object        # callback(tti, allocs: list[Alloc]) -> None
    on_drop: object      # callback(tti) -> None


class DownlinkScheduler:
    """Shared downlink grids with multicast priority over unicast.

    Multicast items occupy the same RB window on every sector grid in the
    same TTI (single-site single-frequency behavior); unicast items occupy
    their target sector only.  Within each class, strict FIFO by (ready,
    enqueue order); pinned HARQ retransmissions bypass the queues entirely
    via direct grid allocation at their exact TTI.
    """

    def __init__(self, grids: list[ResourceGrid], events: EventQueue):
        self.grids = grids
        self.events = events
        self._mc: deque[DlItem] = deque()
        self._uc: list[deque[DlItem]] = [deque() for _ in grids]
        self._seq = 0
        self._ticks: set[int] = set()

    def enqueue_mc(self, ready: int, rb_need: int, deadline: int, on_tx, on_drop) -> None:
        self._seq += 1
        self._mc.append(DlItem(ready, self._seq, "mc", tuple(range(len(self.grids))),
                               rb_need, deadline, on_tx, on_drop))
        self._arm(ready)

    def enqueue_uc(self, ready: int, sector: int, rb_need: int, deadline: int,
                   on_tx, on_drop) -> None:
        self._seq += 1
        self._uc[sector].append(DlItem(ready, self._seq, "uc", (sector,),
                                       rb_need, deadline, on_tx, on_drop))
        self._arm(ready)

    def _arm(self, tti: int) -> None:
        t = max(tti, self.events.clock.now)
        if t not in self._ticks:
            self._ticks.add(t)
            self.events.schedule(t, lambda t=t: self._tick(t))

    def _drain(self, t: int, queue: deque, try_alloc) -> None:
        while queue:
            item = queue[0]
            if t > item.deadline:
                queue.popleft()
                item.on_drop(t)
                continue
            if item.ready > t:
                break  # strict FIFO: wait for the head
            allocs = try_alloc(item)
            if allocs is None:
                break  # no room this TTI; head keeps its turn
            queue.popleft()
            item.on_tx(t, allocs)

    def _tick(self, t: int) -> None:
        self._ticks.discard(t)

        def alloc_mc(item: DlItem):
            lo = self._sfn_gap(t, item.rb_need)
            if lo is None:
                return None
            # same window on every sector grid: single-frequency operation
            return [g.allocate_at(t, lo, item.rb_need, "mc", "dl-mc")
                    for g in self.grids]

        self._drain(t, self._mc, alloc_mc)  # multicast has downlink priority
        for sector, queue in enumerate(self._uc):
            grid = self.grids[sector]

            def alloc_uc(item: DlItem, grid=grid):
                a = grid.allocate(t, item.rb_need, "uc", "dl-uc")
                return None if a is None else [a]

            self._drain(t, queue, alloc_uc)

        if self._mc or any(self._uc):
            self._arm(t + 1)

    def _sfn_gap(self, t: int, need: int) -> int | None:
        """One RB window free on every sector grid at t (common placement)."""
        spans = []
        for g in self.grids:
            spans.extend((a.rb_lo, a.rb_hi) for a in g._exclusive_at(t))
        spans.sort()
        cursor = 0
        for lo, hi in spans:
            if lo - cursor >= need:
                return cursor
            cursor = max(cursor, hi)
        n = self.grids[0].n_rbs
        return cursor if n - cursor >= need else None
