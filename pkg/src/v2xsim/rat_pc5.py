"""Direct vehicle-to-vehicle leg on the 5.9 GHz carrier.

A packet goes out as a small burst of blind copies (no feedback channel).
Under network scheduling (mode 3) copies sit on collision-free grid slots,
periodic when semi-persistent scheduling is on, otherwise granted through
the request chain. Under autonomous selection (mode 4) each copy picks a
(TTI, RB-block) uniformly from the selection window; two senders may pick
the same slot, and such collisions surface as co-channel interference
weighted by the RB overlap fraction.

Radios are half duplex per TTI: a vehicle transmitting anything in TTI t
hears nothing in t. Receivers fold every copy they hear into one soft
combiner, so two weak copies can decode where either alone fails.
"""

from __future__ import annotations

import numpy as np

from .mac import SelectionError, SidelinkMac, SidelinkPool, mode4_select, overlap_fraction
from .phy import ReceptionState, decode, transport_block_rbs


class Pc5Pipeline:
    def __init__(self, sim):
        self.sim = sim
        scn = sim.scn
        mac = scn["mac"]
        self.sps_enabled = bool(mac["sps_enabled"])
        self.reps = int(mac["pc5_repetitions"])
        self.mode = int(mac["sidelink_mode"])
        self.window = int(mac["mode4_window_ms"])
        self.bler_model = scn["phy"]["bler_model"]
        self.bler_slope = float(scn["phy"]["bler_curve_db_per_decade"])
        self.mcs = sim.mcs_table.by_cqi(int(scn["phy"]["pc5_cqi"]))
        self.rb_need = transport_block_rbs(int(scn["traffic"]["packet_bytes"]), self.mcs)
        self.thr_lin = 10.0 ** (self.mcs.threshold_db / 10.0)
        self.grid = sim.pc5_grid
        self.sl = SidelinkMac(sim.pc5_grid, mac["sr_period_ms"],
                              mac["bs_proc_ms"], mac["grant_gap_ms"])
        self.pool = SidelinkPool(sim.pc5_grid.n_rbs)
        self.reservations: dict[int, list] = {}
        self.ledger: dict[int, list[tuple[int, int, int]]] = {}  # tti -> (tx, rb_lo, rbs)

    def configure_sps(self) -> None:
        if self.mode != 3 or not self.sps_enabled:
            return
        period = self.sim.scn.period_ms
        for ue in range(self.sim.fleet.n):
            phase = int(self.sim.fleet.phase_ms[ue]) % period
            res = self.sl.sps_configure(ue, phase, period, self.rb_need, self.reps)
            if res:
                self.reservations[ue] = res

    def launch(self, pkt) -> None:
        copies: list[tuple[int, int]] = []
        if self.mode == 4:
            rng = self.sim.rngs.stream(f"mode4/{pkt.tx}")
            try:
                picks = mode4_select(pkt.tx, self.pool, self.rb_need, rng,
                                     pkt.gen, self.window, self.reps, pkt.deadline_tx)
            except SelectionError:
                picks = []
            for t, lo in picks:
                self.grid.add_overlap(t, lo, self.rb_need, pkt.tx, "sl-m4")
                copies.append((t, lo))
        elif self.sps_enabled and pkt.tx in self.reservations:
            for res in self.reservations[pkt.tx]:
                o = res.next_occurrence(pkt.gen)
                if o <= pkt.deadline_tx:
                    copies.append((o, res.rb_lo))
        else:
            allocs, _ = self.sl.mode3_request(pkt.tx, pkt.gen, self.rb_need,
                                              self.reps, pkt.deadline_tx)
            copies = [(a.tti, a.rb_lo) for a in allocs]
        for t, lo in copies:
            self.sim.events.schedule(t, lambda t=t, lo=lo: self._tx(pkt, t, lo))

    def _tx(self, pkt, t: int, lo: int) -> None:
        self.ledger.setdefault(t, []).append((pkt.tx, lo, self.rb_need))
        if pkt.recorded and pkt.rx_ids.size:
            # all of this TTI's transmit events precede this reception event,
            # so the ledger is complete when it runs
            self.sim.events.schedule(t, lambda: self.pc5_receive(pkt, t, lo))

    def pc5_receive(self, pkt, t: int, lo: int) -> None:
        """Fold one on-air copy into every receiver still waiting for the packet."""
        alive = pkt.pc5_tti < 0
        entries = self.ledger.get(t, ())
        busy = {e[0] for e in entries if e[0] != pkt.tx}
        mask = alive
        if busy:
            mask = alive & ~np.isin(pkt.rx_ids, list(busy))  # half duplex
        if not mask.any():
            return
        ch = self.sim.channel
        atten = ch.v2v_tables()["atten"]
        rx = pkt.rx_ids[mask]
        sig = 10.0 ** ((ch.ue_psd_dbm - atten[pkt.tx, rx]) / 10.0)
        interference = 0.0
        for otx, olo, ocnt in entries:
            if otx == pkt.tx:
                continue
            w = overlap_fraction(lo, self.rb_need, olo, ocnt)
            if w > 0.0:
                interference = interference + w * 10.0 ** ((ch.ue_psd_dbm - atten[otx, rx]) / 10.0)
        pkt.pc5_acc[mask] += sig / (self.sim.noise_ue_lin + interference)
        pkt.pc5_k[mask] += 1
        acc = pkt.pc5_acc[mask]
        if self.bler_model == "step":
            got = acc >= self.thr_lin
        else:
            got = np.zeros(acc.shape, dtype=bool)
            ks = pkt.pc5_k[mask]
            for i, r in enumerate(rx):
                st = ReceptionState(pkt.pid, int(r), [float(acc[i])])
                u = self.sim.rngs.uniform(f"bler/pc5/{pkt.pid}/{int(r)}/{int(ks[i])}")
                got[i] = decode(st, self.mcs, u, "curve", self.bler_slope)
        idx = np.flatnonzero(mask)[got]
        pkt.pc5_tti[idx] = t + 1
