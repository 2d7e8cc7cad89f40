"""Event kernel: ordering, clock monotonicity, named RNG streams."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2xsim.engine import EventQueue, RngStreams, SchedulingError, SimClock


def test_clock_rejects_regression():
    c = SimClock()
    c.advance(5)
    with pytest.raises(SchedulingError):
        c.advance(4)
    assert c.now == 5


def test_schedule_in_past_rejected():
    c = SimClock()
    q = EventQueue(c)
    c.advance(10)
    with pytest.raises(SchedulingError):
        q.schedule(9, lambda: None)
    # scheduling at the current instant is allowed
    q.schedule(10, lambda: None)


def test_equal_time_events_fire_in_insertion_order():
    c = SimClock()
    q = EventQueue(c)
    log = []
    for i in range(20):
        q.schedule(3, lambda i=i: log.append(i))
    q.schedule(1, lambda: log.append("early"))
    q.run()
    assert log == ["early"] + list(range(20))


def test_handler_may_schedule_at_current_tti():
    c = SimClock()
    q = EventQueue(c)
    log = []

    def outer():
        q.schedule(c.now, lambda: log.append("inner"))
        log.append("outer")

    q.schedule(2, outer)
    q.run()
    assert log == ["outer", "inner"]


def test_run_until_stops_before_later_events():
    c = SimClock()
    q = EventQueue(c)
    log = []
    q.schedule(1, lambda: log.append(1))
    q.schedule(5, lambda: log.append(5))
    q.run(until=3)
    assert log == [1]
    assert len(q) == 1
    q.run()
    assert log == [1, 5]


def test_schedule_in_is_relative_to_now():
    c = SimClock()
    q = EventQueue(c)
    hits = []
    q.schedule(4, lambda: q.schedule_in(3, lambda: hits.append(c.now)))
    q.run()
    assert hits == [7]


# --- named streams ---------------------------------------------------------


def test_streams_are_deterministic_and_independent():
    a = RngStreams(7)
    b = RngStreams(7)
    # interleave differently; per-name sequences must not shift
    a_tr = a.stream("traffic").random(5)
    a.stream("mobility").random(100)
    a_tr2 = a.stream("traffic").random(5)

    b.stream("mobility").random(3)
    b_tr = b.stream("traffic").random(5)
    b_tr2 = b.stream("traffic").random(5)

    np.testing.assert_array_equal(a_tr, b_tr)
    np.testing.assert_array_equal(a_tr2, b_tr2)


def test_streams_differ_across_names_and_seeds():
    r = RngStreams(1)
    assert r.stream("a").random() != r.stream("b").random()
    assert RngStreams(1).stream("a").random() != RngStreams(2).stream("a").random()


def test_stream_object_is_cached():
    r = RngStreams(3)
    assert r.stream("x") is r.stream("x")


def test_value_is_order_independent():
    r1 = RngStreams(11)
    r2 = RngStreams(11)
    names = [f"shadow/{i}/{j}" for i in range(5) for j in range(5)]
    fwd = [r1.value(n) for n in names]
    rev = [r2.value(n) for n in reversed(names)]
    assert fwd == list(reversed(rev))


def test_value_and_uniform_are_pure():
    r = RngStreams(42)
    assert r.value("k") == r.value("k")
    assert r.uniform("k") == r.uniform("k")
    assert 0.0 <= r.uniform("k") < 1.0
    # normal and uniform draws for the same name come from the same
    # derived seed but different transforms; both must be stable floats
    assert isinstance(r.value("k"), float)


def test_derived_seed_is_platform_stable():
    # frozen: sha256("1234/traffic") first 8 bytes little-endian
    from v2xsim.engine import _derive_seed

    assert _derive_seed(1234, "traffic") == _derive_seed(1234, "traffic")
    assert _derive_seed(1234, "traffic") != _derive_seed(1234, "traffic ")
    # regression pin so a refactor cannot silently change every stream
    assert _derive_seed(0, "deploy") == 13134469801546366245


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31), st.text(min_size=1, max_size=30))
def test_value_pure_property(seed, name):
    assert RngStreams(seed).value(name) == RngStreams(seed).value(name)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 50), st.integers(0, 10**6)), min_size=1, max_size=40))
def test_events_pop_in_time_then_insertion_order(entries):
    c = SimClock()
    q = EventQueue(c)
    fired = []
    for idx, (t, _) in enumerate(entries):
        q.schedule(t, lambda t=t, idx=idx: fired.append((t, idx)))
    q.run()
    assert fired == sorted(fired)
