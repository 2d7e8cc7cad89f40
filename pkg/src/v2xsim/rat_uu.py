"""Cellular leg: SPS/dynamic uplink, core hop, unicast or broadcast downlink.

Timing model, all in whole TTIs. An attempt transmitted in TTI t ends at
t+1; a retransmission starts exactly harq_gap_ms after that end, booked
directly on the grid (pinned, so it never queues). The packet reaches the
core side at uplink end + core_delay_ms and becomes eligible for downlink
transmission dl_proc_ms later. Delivery in TTI t means arrival at t+1, so
the last transmit opportunity within a bound L is generation + L - 1.

Broadcast downlink sends the same RB window from every sector in one TTI;
a receiver folds all three sector copies into its combiner, and repeat
transmissions (blind, no feedback) are re-queued best effort. Unicast
serves each receiver from its strongest sector with closed-loop HARQ and
suffers co-channel interference from the other sectors' own traffic.
"""

from __future__ import annotations

import numpy as np

from .mac import UplinkScheduler, overlap_fraction
from .phy import (HarqExhausted, HarqProcess, ReceptionState, decode,
                  harq_next_attempt, mrc_combine, select_uplink_mcs,
                  transport_block_rbs)


class UuPipeline:
    def __init__(self, sim):
        self.sim = sim
        scn = sim.scn
        mac = scn["mac"]
        self.mode = scn.uu_mode()
        self.sps_enabled = bool(mac["sps_enabled"])
        self.core_ms = int(mac["core_delay_ms"])
        self.dl_proc = int(mac["dl_proc_ms"])
        self.harq_max = int(mac["harq_max_attempts"])
        self.harq_gap = int(mac["harq_gap_ms"])
        self.embms_reps = int(mac["embms_repetitions"])
        self.payload = int(scn["traffic"]["packet_bytes"])
        self.bler_model = scn["phy"]["bler_model"]
        self.bler_slope = float(scn["phy"]["bler_curve_db_per_decade"])
        self.table = sim.mcs_table
        self.embms_mcs = self.table.by_cqi(int(scn["phy"]["embms_cqi"]))
        self.embms_rbs = transport_block_rbs(self.payload, self.embms_mcs)
        self.embms_thr_lin = 10.0 ** (self.embms_mcs.threshold_db / 10.0)
        self.ul_sched = UplinkScheduler(sim.ul_grid, mac["sr_period_ms"],
                                        mac["bs_proc_ms"], mac["grant_gap_ms"])
        self.grants: dict[int, tuple] = {}  # ue -> (Grant, McsEntry, rb_need)

    # -- configuration -------------------------------------------------------

    def configure_sps(self) -> None:
        """Admit periodic uplink grants for every vehicle, in index order."""
        scn = self.sim.scn
        period = scn.period_ms
        for ue in range(self.sim.fleet.n):
            csi = self.sim.channel.ul_csi_per_rb_sinr(ue)
            mcs = select_uplink_mcs(csi, self.table)
            need = transport_block_rbs(self.payload, mcs)
            phase = int(self.sim.fleet.phase_ms[ue]) % period
            grant = self.ul_sched.sps_configure(ue, phase, period, need)
            if grant is not None:
                self.grants[ue] = (grant, mcs, need)

    # -- uplink ---------------------------------------------------------------

    def launch(self, pkt) -> None:
        tx = pkt.tx
        if self.sps_enabled and tx in self.grants:
            grant, mcs, need = self.grants[tx]
            first = grant.next_occurrence(pkt.gen)
        else:
            csi = self.sim.channel.ul_csi_per_rb_sinr(tx)
            mcs = select_uplink_mcs(csi, self.table)
            need = transport_block_rbs(self.payload, mcs)
            alloc, _ = self.ul_sched.dynamic_request(tx, pkt.gen, need, pkt.deadline_tx)
            if alloc is None:
                return
            first = alloc.tti
        if first > pkt.deadline_tx:
            return
        state = ReceptionState(pkt.pid, "bs")
        harq = HarqProcess(pkt.pid, self.harq_max, self.harq_gap)
        self.sim.events.schedule(
            first, lambda: self._ul_attempt(pkt, mcs, need, state, harq, first))

    def _bler_u(self, tag: str, k: int):
        if self.bler_model == "step":
            return None
        return self.sim.rngs.uniform(f"bler/{tag}/{k}")

    def _ul_attempt(self, pkt, mcs, need, state, harq, t) -> None:
        pkt.ul_log.append(t)
        mrc_combine(state, self.sim.channel.ul_csi_per_rb_sinr(pkt.tx))
        harq.record_attempt(t, t + 1)
        ok = decode(state, mcs, self._bler_u(f"uu-ul/{pkt.pid}", state.k),
                    self.bler_model, self.bler_slope)
        if ok:
            pkt.uu_ul = t + 1 - pkt.gen
            self._to_downlink(pkt, t + 1)
            return
        try:
            nxt = harq_next_attempt(harq, t + 1)
        except HarqExhausted:
            return
        if nxt > pkt.deadline_tx:
            return
        if self.sim.ul_grid.allocate(nxt, need, pkt.tx, "ul-retx") is None:
            return  # no room at the pinned retransmission slot
        self.sim.events.schedule(
            nxt, lambda: self._ul_attempt(pkt, mcs, need, state, harq, nxt))

    # -- downlink -------------------------------------------------------------

    def _to_downlink(self, pkt, ul_end: int) -> None:
        bs_time = ul_end + self.core_ms
        ready = bs_time + self.dl_proc
        if self.mode == "embms":
            self._enqueue_embms(pkt, bs_time, ready, self.embms_reps)
        else:
            self._enqueue_unicast(pkt, bs_time, ready)

    def _enqueue_embms(self, pkt, bs_time: int, ready: int, copies_left: int) -> None:
        def on_tx(t, allocs):
            # decode after the scheduler finishes the TTI, so the full
            # allocation picture is on the grids
            self.sim.events.schedule(t, lambda: self._embms_rx(pkt, bs_time, t))
            if copies_left > 1:
                self._enqueue_embms(pkt, bs_time, t + 1, copies_left - 1)

        self.sim.dl_sched.enqueue_mc(ready, self.embms_rbs, pkt.deadline_tx,
                                     on_tx, lambda t: None)

    def _embms_rx(self, pkt, bs_time: int, t: int) -> None:
        if not pkt.recorded or pkt.rx_ids.size == 0:
            return
        alive = pkt.uu_tti < 0
        if not alive.any():
            return
        ch = self.sim.channel
        rows = ch.uu_tables()["atten"][pkt.rx_ids[alive]]  # [k, sectors]
        snr = (10.0 ** ((ch.bs_psd_dbm - rows) / 10.0)).sum(axis=1) / self.sim.noise_ue_lin
        pkt.uu_acc[alive] += snr
        acc = pkt.uu_acc[alive]
        if self.bler_model == "step":
            got = acc >= self.embms_thr_lin
        else:
            got = np.zeros(acc.shape, dtype=bool)
            for i, rx in enumerate(pkt.rx_ids[alive]):
                st = ReceptionState(pkt.pid, int(rx), [float(acc[i])])
                u = self._bler_u(f"uu-dl/{pkt.pid}/{int(rx)}", t)
                got[i] = decode(st, self.embms_mcs, u, "curve", self.bler_slope)
        idx = np.flatnonzero(alive)[got]
        pkt.uu_tti[idx] = t + 1
        pkt.uu_dl[idx] = t + 1 - bs_time

    def _enqueue_unicast(self, pkt, bs_time: int, ready: int) -> None:
        ch = self.sim.channel
        serving = ch.serving_sector()
        for idx in range(pkt.rx_ids.size):
            rx = int(pkt.rx_ids[idx])
            sec = int(serving[rx])
            csi = ch.dl_rx_psd_dbm(rx, sec) - ch.noise_ue_rb
            mcs = self.table.select(csi)
            need = transport_block_rbs(self.payload, mcs)
            state = ReceptionState(pkt.pid, rx)
            harq = HarqProcess(pkt.pid, self.harq_max, self.harq_gap)

            def on_tx(t, allocs, idx=idx, rx=rx, sec=sec, mcs=mcs,
                      state=state, harq=harq):
                a = allocs[0]
                self.sim.events.schedule(t, lambda: self._uc_rx(
                    pkt, idx, rx, sec, a, mcs, state, harq, bs_time, t))

            self.sim.dl_sched.enqueue_uc(ready, sec, need, pkt.deadline_tx,
                                         on_tx, lambda t: None)

    def _uc_rx(self, pkt, idx, rx, sec, alloc, mcs, state, harq, bs_time, t) -> None:
        co = []
        for k, grid in enumerate(self.sim.dl_grids):
            if k == sec:
                continue  # own-cell traffic is orthogonal within the grid
            for a in grid.allocs_at(t):
                w = overlap_fraction(alloc.rb_lo, alloc.rb_count, a.rb_lo, a.rb_count)
                if w > 0.0:
                    co.append((("bs", k), w))
        sample = self.sim.channel.compute_sinr(rx, ("bs", sec), co, "uu-dl", t)
        mrc_combine(state, sample.sinr_db)
        harq.record_attempt(t, t + 1)
        ok = decode(state, mcs, self._bler_u(f"uu-dl/{pkt.pid}/{rx}", state.k),
                    self.bler_model, self.bler_slope)
        if ok:
            pkt.uu_tti[idx] = t + 1
            pkt.uu_dl[idx] = t + 1 - bs_time
            return
        try:
            nxt = harq_next_attempt(harq, t + 1)
        except HarqExhausted:
            return
        if nxt > pkt.deadline_tx:
            return
        nxt_alloc = self.sim.dl_grids[sec].allocate(nxt, alloc.rb_count,
                                                    (pkt.pid, rx), "dl-retx")
        if nxt_alloc is None:
            return
        self.sim.events.schedule(nxt, lambda: self._uc_rx(
            pkt, idx, rx, sec, nxt_alloc, mcs, state, harq, bs_time, nxt))
