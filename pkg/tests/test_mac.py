"""Schedulers: grids, SR/DCI delay chain, SPS admission, sidelink selection,
downlink queueing."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2xsim.engine import EventQueue, SimClock
from v2xsim.mac import (
    Alloc,
    DownlinkScheduler,
    Grant,
    Reservation,
    ResourceGrid,
    SelectionError,
    SidelinkMac,
    SidelinkPool,
    UplinkScheduler,
    mode4_select,
    overlap_fraction,
)


# --- ResourceGrid ------------------------------------------------------------


def test_first_fit_allocation_and_capacity():
    g = ResourceGrid("ul", 50)
    a = g.allocate(5, 16, "ue0", "ul-dyn")
    assert (a.rb_lo, a.rb_hi) == (0, 16)
    b = g.allocate(5, 16, "ue1", "ul-dyn")
    assert (b.rb_lo, b.rb_hi) == (16, 32)
    c = g.allocate(5, 16, "ue2", "ul-dyn")
    assert c.rb_lo == 32
    assert g.allocate(5, 16, "ue3", "ul-dyn") is None  # only 2 RBs left
    assert g.free_rbs(5) == 2
    assert g.free_rbs(6) == 50


def test_allocate_at_respects_conflicts_and_bounds():
    g = ResourceGrid("dl", 50)
    g.allocate(3, 10, "x", "dl-uc")  # occupies 0..10
    assert g.allocate_at(3, 5, 10, "y", "dl-uc") is None
    assert g.allocate_at(3, 45, 10, "y", "dl-uc") is None  # out of bounds
    assert g.allocate_at(3, -1, 5, "y", "dl-uc") is None
    ok = g.allocate_at(3, 10, 10, "y", "dl-uc")
    assert (ok.rb_lo, ok.rb_hi) == (10, 20)


def test_allocate_from_defers_under_congestion():
    g = ResourceGrid("ul", 50)
    for t in (10, 11):
        g.allocate(t, 40, "bg", "ul-dyn")
    a = g.allocate_from(10, 16, "ue", "ul-dyn")
    assert a.tti == 12
    # deadline cuts the search off
    g2 = ResourceGrid("ul", 50)
    g2.allocate(10, 40, "bg", "ul-dyn")
    assert g2.allocate_from(10, 16, "ue", "ul-dyn", deadline=10) is None


def test_free_gap_finds_hole_between_allocations():
    g = ResourceGrid("ul", 50)
    g.allocate_at(0, 0, 10, "a", "x")
    g.allocate_at(0, 20, 10, "b", "x")
    assert g.free_gap(0, 10) == 10
    assert g.free_gap(0, 11) == 30
    assert g.free_gap(0, 21) is None


def test_reservations_occupy_their_phase_lattice():
    g = ResourceGrid("ul", 50)
    r = g.reserve_periodic(7, 100, 16, "ue0", "ul-sps")
    assert r.rb_lo == 0
    assert r.active_at(7) and r.active_at(107) and not r.active_at(8)
    assert r.next_occurrence(0) == 7
    assert r.next_occurrence(7) == 7
    assert r.next_occurrence(8) == 107
    # one-shots see the reservation as occupied at active TTIs only
    assert g.free_rbs(7) == 34
    assert g.free_rbs(107) == 34
    assert g.free_rbs(8) == 50


def test_same_phase_reservations_pack_side_by_side():
    g = ResourceGrid("ul", 50)
    r1 = g.reserve_periodic(7, 100, 16, "a", "ul-sps")
    r2 = g.reserve_periodic(7, 100, 16, "b", "ul-sps")
    r3 = g.reserve_periodic(7, 100, 16, "c", "ul-sps")
    assert (r1.rb_lo, r2.rb_lo, r3.rb_lo) == (0, 16, 32)
    assert g.reserve_periodic(7, 100, 16, "d", "ul-sps") is None
    # a different phase has its own lattice
    assert g.reserve_periodic(8, 100, 16, "d", "ul-sps").rb_lo == 0


def test_grid_enforces_single_reservation_period():
    g = ResourceGrid("ul", 50)
    g.reserve_periodic(0, 100, 4, "a", "ul-sps")
    with pytest.raises(ValueError, match="single reservation period"):
        g.reserve_periodic(0, 50, 4, "b", "ul-sps")


def test_overlap_ledger_is_non_exclusive():
    g = ResourceGrid("pc5", 50)
    g.add_overlap(4, 0, 16, "u1", "sl-m4")
    g.add_overlap(4, 0, 16, "u2", "sl-m4")  # same block, both legal
    assert len(g.overlaps_at(4)) == 2
    assert g.free_rbs(4) == 50  # ledger entries do not block one-shots
    assert len(g.allocs_at(4)) == 2


def test_purge_drops_old_ttis():
    g = ResourceGrid("ul", 50)
    g.allocate(3, 4, "a", "x")
    g.allocate(9, 4, "a", "x")
    g.add_overlap(3, 0, 4, "b", "y")
    g.purge_before(5)
    assert g.allocs_at(3) == []
    assert len(g.allocs_at(9)) == 1


def test_overlap_fraction_cases():
    assert overlap_fraction(0, 16, 0, 16) == 1.0
    assert overlap_fraction(0, 16, 8, 16) == 0.5
    assert overlap_fraction(0, 16, 16, 16) == 0.0
    assert overlap_fraction(0, 16, 12, 4) == 0.25
    assert overlap_fraction(4, 8, 0, 16) == 1.0
    assert overlap_fraction(0, 0, 0, 16) == 0.0


@settings(max_examples=80, deadline=None)
@given(a_lo=st.integers(0, 40), a_n=st.integers(1, 20),
       b_lo=st.integers(0, 40), b_n=st.integers(1, 20))
def test_overlap_fraction_bounds(a_lo, a_n, b_lo, b_n):
    f = overlap_fraction(a_lo, a_n, b_lo, b_n)
    assert 0.0 <= f <= 1.0
    # symmetric in RB terms: a_n * f(a,b) == b_n * f(b,a)
    assert a_n * f == pytest.approx(b_n * overlap_fraction(b_lo, b_n, a_lo, a_n))


# --- dynamic uplink chain ------------------------------------------------------


def test_sr_to_data_delay_chain():
    g = ResourceGrid("ul", 50)
    s = UplinkScheduler(g)
    alloc, trace = s.dynamic_request("ue0", now=0, rb_need=16)
    # packet at 0: SR at 4, grant at 7, data at 10
    assert trace == {"sr": 4, "grant": 7, "target": 10, "data": 10}
    assert alloc.tti == 10
    assert s.sr_events == [(4, "ue0")]


def test_sr_opportunity_lands_on_period_end():
    s = UplinkScheduler(ResourceGrid("ul", 50))
    assert s.next_sr_opportunity(0) == 4
    assert s.next_sr_opportunity(4) == 4
    assert s.next_sr_opportunity(5) == 9
    assert s.next_sr_opportunity(99) == 99


def test_dynamic_request_defers_under_congestion():
    g = ResourceGrid("ul", 50)
    g.allocate(10, 40, "bg", "ul-dyn")
    s = UplinkScheduler(g)
    alloc, trace = s.dynamic_request("ue0", now=0, rb_need=16)
    assert alloc.tti == 11
    assert trace["target"] == 10 and trace["data"] == 11


def test_dynamic_request_gives_up_at_deadline():
    g = ResourceGrid("ul", 50)
    for t in range(10, 21):
        g.allocate(t, 40, "bg", "ul-dyn")
    s = UplinkScheduler(g)
    alloc, trace = s.dynamic_request("ue0", now=0, rb_need=16, deadline=20)
    assert alloc is None and trace["data"] is None


def test_sps_admission_walks_phases():
    g = ResourceGrid("ul", 50)
    s = UplinkScheduler(g)
    # three UEs want phase 7; grid fits 3x16
    for ue in ("a", "b", "c"):
        assert s.sps_configure(ue, 7, 100, 16).start == 7
    spilled = s.sps_configure("d", 7, 100, 16)
    assert spilled.start == 8  # phase 7 is full, spill to the next TTI
    assert spilled.period == 100
    assert spilled.next_occurrence(9) == 108
    assert s.sps_configure("e", 7, 100, 64) is None  # wider than the carrier


def test_sps_grant_recurs_exactly_every_period():
    s = UplinkScheduler(ResourceGrid("ul", 50))
    grant = s.sps_configure("ue", 30, 100, 16)
    occ = []
    t = 0
    for _ in range(4):
        t = grant.next_occurrence(t)
        occ.append(t)
        t += 1
    assert occ == [30, 130, 230, 330]


# --- sidelink ------------------------------------------------------------------


def test_pool_block_starts_are_aligned():
    pool = SidelinkPool(n_rbs=50)
    assert pool.block_starts(16) == [0, 16, 32]
    assert pool.block_starts(25) == [0, 25]
    assert pool.block_starts(51) == []


def test_mode4_selection_window_and_distinctness():
    pool = SidelinkPool(n_rbs=50)
    rng = np.random.default_rng(7)
    for _ in range(200):
        picks = mode4_select("ue", pool, 16, rng, now=50, window_ms=100, reps=2)
        assert len(picks) == 2
        ts = [t for t, _ in picks]
        assert len(set(ts)) == 2
        for t, lo in picks:
            assert 51 <= t <= 150
            assert lo in (0, 16, 32)
    with pytest.raises(SelectionError, match="block fits"):
        mode4_select("ue", pool, 51, rng, now=0, window_ms=100)


def test_mode4_window_clamped_by_deadline():
    pool = SidelinkPool(n_rbs=50)
    rng = np.random.default_rng(3)
    picks = mode4_select("ue", pool, 16, rng, now=50, window_ms=100,
                         reps=2, last_tti=52)
    assert [t for t, _ in picks] == [51, 52]
    with pytest.raises(SelectionError, match="empty selection window"):
        mode4_select("ue", pool, 16, rng, now=50, window_ms=100, last_tti=50)


def test_mode4_selection_is_uniform():
    pool = SidelinkPool(n_rbs=50)
    rng = np.random.default_rng(11)
    counts = np.zeros((10, 3))
    n = 6000
    for _ in range(n):
        [(t, lo)] = mode4_select("ue", pool, 16, rng, now=0, window_ms=10)
        counts[t - 1, lo // 16] += 1
    expect = n / 30.0
    # chi-square-ish bound: each cell within 5 sigma of the uniform mean
    assert np.all(np.abs(counts - expect) < 5 * np.sqrt(expect))


def test_mode4_collisions_happen_in_a_crowd():
    pool = SidelinkPool(n_rbs=50)
    rng = np.random.default_rng(2)
    seen = set()
    collisions = 0
    for ue in range(200):
        for t, lo in mode4_select(ue, pool, 16, rng, now=0, window_ms=100):
            if (t, lo) in seen:
                collisions += 1
            seen.add((t, lo))
    assert collisions > 0  # 200 picks into 300 slots must collide somewhere


def test_mode3_request_allocates_consecutive_copies():
    mac = SidelinkMac(ResourceGrid("pc5", 50))
    allocs, trace = mac.mode3_request("ue0", now=0, rb_need=16, reps=2)
    assert [a.tti for a in allocs] == [10, 11]
    assert trace["sr"] == 4
    assert mac.sr_events == [(4, "ue0")]


def test_mode3_copies_are_best_effort():
    g = ResourceGrid("pc5", 50)
    for t in range(11, 30):
        g.allocate(t, 40, "bg", "x")
    mac = SidelinkMac(g)
    allocs, _ = mac.mode3_request("ue0", now=0, rb_need=16, reps=2, deadline=20)
    assert [a.tti for a in allocs] == [10]  # second copy found no room


def test_sidelink_sps_uses_consecutive_phases():
    mac = SidelinkMac(ResourceGrid("pc5", 50))
    rs = mac.sps_configure("ue0", 30, 100, 16, reps=2)
    assert [r.phase for r in rs] == [30, 31]
    # second UE at the same phase packs beside the first
    rs2 = mac.sps_configure("ue1", 30, 100, 16, reps=2)
    assert [r.phase for r in rs2] == [30, 31]
    assert rs2[0].rb_lo == 16


def test_sidelink_sps_wraps_phase_at_period():
    mac = SidelinkMac(ResourceGrid("pc5", 50))
    rs = mac.sps_configure("ue0", 99, 100, 16, reps=2)
    assert [r.phase for r in rs] == [99, 0]


# --- downlink scheduler ----------------------------------------------------------


def _dl(n_sectors=3, n_rbs=50):
    clock = SimClock()
    events = EventQueue(clock)
    grids = [ResourceGrid(f"dl{k}", n_rbs) for k in range(n_sectors)]
    return DownlinkScheduler(grids, events), events, grids


def test_multicast_occupies_same_window_on_all_sectors():
    dl, events, grids = _dl()
    sent = []
    dl.enqueue_mc(5, 11, 100, lambda t, allocs: sent.append((t, allocs)), lambda t: None)
    events.run()
    assert len(sent) == 1
    t, allocs = sent[0]
    assert t == 5 and len(allocs) == 3
    assert len({a.rb_lo for a in allocs}) == 1  # identical window everywhere
    for g, a in zip(grids, allocs):
        assert g.allocs_at(5) == [a]


def test_sfn_window_avoids_every_sectors_traffic():
    dl, events, grids = _dl()
    # sector 1 already carries a unicast alloc at 0..11 in TTI 5
    grids[1].allocate_at(5, 0, 11, "uc", "dl-uc")
    got = []
    dl.enqueue_mc(5, 11, 100, lambda t, allocs: got.append(allocs), lambda t: None)
    events.run()
    assert got[0][0].rb_lo == 11  # shifted past sector 1's occupancy on ALL grids
    assert all(a.rb_lo == 11 for a in got[0])


def test_multicast_has_priority_over_unicast():
    dl, events, grids = _dl(n_sectors=1, n_rbs=16)
    order = []
    # unicast enqueued FIRST, but multicast wins the shared TTI
    dl.enqueue_uc(5, 0, 16, 100, lambda t, a: order.append(("uc", t)), lambda t: None)
    dl.enqueue_mc(5, 16, 100, lambda t, a: order.append(("mc", t)), lambda t: None)
    events.run()
    assert order == [("mc", 5), ("uc", 6)]


def test_unicast_fifo_head_of_line_blocking():
    dl, events, grids = _dl(n_sectors=1)
    order = []
    dl.enqueue_uc(10, 0, 11, 100, lambda t, a: order.append(("a", t)), lambda t: None)
    dl.enqueue_uc(5, 0, 11, 100, lambda t, a: order.append(("b", t)), lambda t: None)
    events.run()
    # b is ready earlier but a is at the head: strict FIFO holds b back
    assert order == [("a", 10), ("b", 10)]


def test_deadline_drop_calls_on_drop():
    dl, events, grids = _dl(n_sectors=1, n_rbs=16)
    grids[0].allocate_at(5, 0, 16, "bg", "x")
    grids[0].allocate_at(6, 0, 16, "bg", "x")
    out = []
    dl.enqueue_uc(5, 0, 16, 6, lambda t, a: out.append(("tx", t)),
                  lambda t: out.append(("drop", t)))
    dl.enqueue_uc(5, 0, 16, 100, lambda t, a: out.append(("tx2", t)), lambda t: None)
    events.run()
    assert ("drop", 7) in out
    assert ("tx2", 7) in out  # successor served once the dead head clears


def test_queue_drains_across_ttis_under_congestion():
    dl, events, grids = _dl(n_sectors=1, n_rbs=16)
    out = []
    for i in range(3):
        dl.enqueue_uc(5, 0, 16, 100, lambda t, a, i=i: out.append((i, t)), lambda t: None)
    events.run()
    assert out == [(0, 5), (1, 6), (2, 7)]


def test_sector_queues_are_independent():
    dl, events, grids = _dl(n_sectors=2, n_rbs=16)
    out = []
    dl.enqueue_uc(5, 0, 16, 100, lambda t, a: out.append(("s0", t)), lambda t: None)
    dl.enqueue_uc(5, 1, 16, 100, lambda t, a: out.append(("s1", t)), lambda t: None)
    events.run()
    assert sorted(out) == [("s0", 5), ("s1", 5)]  # no cross-sector blocking