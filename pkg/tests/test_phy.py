"""Link layer: MCS selection, transport blocks, soft combining, HARQ timing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from v2xsim.phy import (
    HarqExhausted,
    HarqProcess,
    McsEntry,
    McsTable,
    ReceptionState,
    bler_curve,
    decode,
    default_table,
    harq_next_attempt,
    load_table,
    mrc_combine,
    transport_block_rbs,
)

TABLE = default_table()


# --- MCS table ---------------------------------------------------------------


def test_table_has_15_strictly_increasing_entries():
    assert len(TABLE) == 15
    effs = [e.efficiency for e in TABLE.entries]
    thrs = [e.threshold_db for e in TABLE.entries]
    assert effs == sorted(effs) and len(set(effs)) == 15
    assert thrs == sorted(thrs) and len(set(thrs)) == 15
    assert [e.cqi for e in TABLE.entries] == list(range(1, 16))


def test_fixed_grant_entries():
    cqi4 = TABLE.by_cqi(4)
    cqi5 = TABLE.by_cqi(5)
    assert cqi4.efficiency == pytest.approx(0.6016)
    assert cqi4.threshold_db == pytest.approx(-1.0)
    assert cqi5.efficiency == pytest.approx(0.8870)
    assert cqi5.threshold_db == pytest.approx(1.0)


def test_select_picks_highest_entry_at_or_below_csi():
    # exactly on a threshold: that entry is usable (boundary inclusive)
    e = TABLE.select(TABLE.by_cqi(7).threshold_db)
    assert e.cqi == 7
    # between thresholds 7 and 8
    mid = (TABLE.by_cqi(7).threshold_db + TABLE.by_cqi(8).threshold_db) / 2
    assert TABLE.select(mid).cqi == 7
    # below every threshold: fall back to the most robust entry
    assert TABLE.select(-50.0).cqi == 1
    # absurdly good channel: top entry
    assert TABLE.select(40.0).cqi == 15


@settings(max_examples=80, deadline=None)
@given(st.floats(-30, 40, allow_nan=False))
def test_select_monotone_in_csi(csi):
    lo = TABLE.select(csi)
    hi = TABLE.select(csi + 3.0)
    assert hi.efficiency >= lo.efficiency
    assert lo.threshold_db <= csi or lo.cqi == 1


def test_malformed_table_rejected():
    rows = [McsEntry(1, "qpsk", 0.2, -6.0), McsEntry(2, "qpsk", 0.15, -4.0)]
    with pytest.raises(ValueError, match="not strictly increasing"):
        McsTable(rows)
    with pytest.raises(ValueError, match="empty"):
        McsTable([])


def test_load_table_default_and_csv(tmp_path):
    assert load_table("default").by_cqi(4).efficiency == pytest.approx(0.6016)
    p = tmp_path / "t.csv"
    p.write_text("cqi,modulation,efficiency,threshold_db\n1,qpsk,0.15,-6.7\n2,qpsk,0.23,-4.7\n")
    t = load_table(str(p))
    assert len(t) == 2 and t.by_cqi(2).threshold_db == -4.7


# --- transport blocks --------------------------------------------------------


def test_tb_goldens_for_212_bytes():
    # 212 B * 8 = 1696 bit; CQI4: 0.6016 * 180e3 * 1e-3 = 108.288 bit/RB -> 16
    assert transport_block_rbs(212, TABLE.by_cqi(4)) == 16
    # CQI5: 0.8870 * 180 = 159.66 bit/RB -> 11
    assert transport_block_rbs(212, TABLE.by_cqi(5)) == 11


def test_tb_edges():
    assert transport_block_rbs(1, TABLE.by_cqi(15)) == 1
    with pytest.raises(ValueError, match="payload must be positive"):
        transport_block_rbs(0, TABLE.by_cqi(4))
    # very large payloads exceed one carrier: segmentation is the caller's
    assert transport_block_rbs(100_000, TABLE.by_cqi(1)) > 50


@settings(max_examples=60, deadline=None)
@given(payload=st.integers(1, 5000), cqi=st.integers(1, 15))
def test_tb_covers_payload_exactly(payload, cqi):
    e = TABLE.by_cqi(cqi)
    n = transport_block_rbs(payload, e)
    assert n * e.bits_per_rb() >= payload * 8
    assert (n - 1) * e.bits_per_rb() < payload * 8


# --- soft combining ----------------------------------------------------------


def test_mrc_two_0db_copies():
    st_ = ReceptionState(1, 2)
    mrc_combine(st_, 0.0)
    got = mrc_combine(st_, 0.0)
    assert got == pytest.approx(3.010299956639812, abs=1e-12)


def test_mrc_is_exact_linear_sum():
    st_ = ReceptionState(1, 2)
    for v in (2.0, 3.0, 5.0):
        st_.add_copy_linear(v)
    assert st_.mrc_linear == 10.0  # exactly
    assert st_.mrc_sinr_db == pytest.approx(10.0, abs=1e-12)
    assert st_.k == 3


def test_mrc_permutation_invariance():
    rng = np.random.default_rng(0)
    values = rng.uniform(0.001, 100.0, size=12)
    a = ReceptionState(0, 0)
    b = ReceptionState(0, 0)
    for v in values:
        a.add_copy_linear(v)
    for v in values[::-1]:
        b.add_copy_linear(v)
    assert a.mrc_linear == b.mrc_linear  # fsum: bitwise equal


def test_mrc_empty_state_is_minus_inf():
    assert ReceptionState(0, 0).mrc_sinr_db == -math.inf


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(1e-6, 1e6), min_size=1, max_size=10))
def test_mrc_at_least_best_copy(copies):
    st_ = ReceptionState(0, 0)
    for v in copies:
        st_.add_copy_linear(v)
    assert st_.mrc_linear >= max(copies)
    assert st_.mrc_sinr_db >= 10 * math.log10(max(copies)) - 1e-9


# --- decode ------------------------------------------------------------------


def test_step_decode_boundary_inclusive():
    # 0 dB round-trips exactly through the linear domain, so the combined
    # value lands precisely on the threshold: the comparison must accept it
    e = McsEntry(4, "qpsk", 0.6016, 0.0)
    st_ = ReceptionState(0, 0)
    st_.add_copy_linear(1.0)
    assert st_.mrc_sinr_db == 0.0
    assert decode(st_, e) is True
    st2 = ReceptionState(0, 0)
    st2.add_copy_db(-1e-6)
    assert decode(st2, e) is False


def test_two_weak_copies_combine_past_threshold():
    # threshold 3 dB; copies at 1 dB each: combined 4.0103 dB
    e = McsEntry(4, "qpsk", 0.6016, 3.0)
    st_ = ReceptionState(0, 0)
    st_.add_copy_db(1.0)
    assert decode(st_, e) is False
    combined = st_.add_copy_db(1.0)
    assert combined == pytest.approx(4.0102999566398125, abs=1e-12)
    assert decode(st_, e) is True


def test_decode_requires_a_copy():
    with pytest.raises(ValueError, match="at least one received copy"):
        decode(ReceptionState(0, 0), TABLE.by_cqi(4))


def test_bler_curve_values():
    assert bler_curve(5.0, 5.0) == pytest.approx(0.1)
    assert bler_curve(6.0, 5.0, 1.0) == pytest.approx(0.01)
    assert bler_curve(4.0, 5.0, 1.0) == 1.0  # capped
    assert bler_curve(7.0, 5.0, 2.0) == pytest.approx(0.01)


def test_curve_decode_uses_uniform_draw():
    e = McsEntry(4, "qpsk", 0.6016, 0.0)
    st_ = ReceptionState(0, 0)
    st_.add_copy_db(0.0)  # bler exactly 0.1
    assert decode(st_, e, rng=0.05, model="curve") is False
    assert decode(st_, e, rng=0.1, model="curve") is True
    assert decode(st_, e, rng=0.95, model="curve") is True
    # generator form
    assert decode(st_, e, rng=np.random.default_rng(1), model="curve") in (True, False)
    with pytest.raises(ValueError, match="unknown BLER model"):
        decode(st_, e, model="magic")


@settings(max_examples=50, deadline=None)
@given(
    copies=st.lists(st.floats(-20, 20), min_size=1, max_size=6),
    extra=st.floats(-20, 20),
)
def test_step_decode_monotone_in_copies(copies, extra):
    """Adding a copy never turns a success into a failure."""
    e = TABLE.by_cqi(8)
    st_ = ReceptionState(0, 0)
    for c in copies:
        st_.add_copy_db(c)
    before = decode(st_, e)
    st_.add_copy_db(extra)
    after = decode(st_, e)
    assert after >= before


# --- HARQ --------------------------------------------------------------------


def test_harq_retx_exactly_gap_after_end():
    p = HarqProcess(packet_id=9)
    p.record_attempt(3, 10)
    assert harq_next_attempt(p, nack_time=10) == 17


def test_harq_chain_with_single_tti_attempts():
    p = HarqProcess(packet_id=1)
    starts = []
    t = 0
    for _ in range(3):
        p.record_attempt(t, t + 1)
        starts.append(t)
        t = harq_next_attempt(p, t + 1)
    assert starts == [0, 8, 16]


def test_harq_exhaustion():
    p = HarqProcess(packet_id=2, max_attempts=1)
    p.record_attempt(0, 1)
    with pytest.raises(HarqExhausted):
        harq_next_attempt(p, 1)
    assert p.exhausted


def test_harq_guards():
    p = HarqProcess(packet_id=3)
    with pytest.raises(ValueError, match="no prior attempt"):
        harq_next_attempt(p, 0)
    p.record_attempt(5, 6)
    with pytest.raises(ValueError, match="before the previous one ended"):
        p.record_attempt(5, 7)


def test_harq_default_budget_is_four_attempts():
    p = HarqProcess(packet_id=4)
    t = 0
    for i in range(4):
        p.record_attempt(t, t + 1)
        if i < 3:
            t = harq_next_attempt(p, t + 1)
    assert p.exhausted
    assert len(p.log) == 4
    with pytest.raises(HarqExhausted):
        harq_next_attempt(p, t)


@settings(max_examples=60, deadline=None)
@given(
    gap=st.integers(1, 20),
    spans=st.lists(st.tuples(st.integers(0, 50), st.integers(1, 4)), min_size=1, max_size=4),
)
def test_harq_gap_property(gap, spans):
    p = HarqProcess(packet_id=0, max_attempts=len(spans) + 1, gap_ms=gap)
    t = 0
    for offset, dur in spans:
        start = t + offset
        p.record_attempt(start, start + dur)
        t = harq_next_attempt(p, start + dur)
        assert t - p.last_end == gap