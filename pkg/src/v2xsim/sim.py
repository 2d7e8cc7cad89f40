"""Run orchestration: world build, traffic generation, event loop, records.

A run is a pure function of (scenario, master seed). Everything random
flows through named streams; per-link quantities are frozen one-shot draws,
so the realization of a link never depends on simulation order. Mobility
epoch events are scheduled before traffic, which makes movement take effect
ahead of any same-TTI transmission.

Generation in TTI g with latency bound L leaves g + L - 1 as the last
usable transmit TTI: a copy sent there arrives at g + L, anything later
could never count. Every leg enforces that cutoff, so a packet's fate is
settled by the time the event queue drains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel
from .config import Scenario
from .engine import EventQueue, RngStreams, SimClock
from .environment import build_grid, drop_vehicles, step_mobility
from .mac import DownlinkScheduler, ResourceGrid
from .metrics import RecordStore, RunResult
from .multirat import WINNER_UU, merge_arrays
from .phy import load_table
from .rat_pc5 import Pc5Pipeline
from .rat_uu import UuPipeline

# schemes whose downlink load depends on the receiver population: their
# relevant set is pinned to the target range and sweeps re-simulate
RANGE_COUPLED = ("uu-unicast", "multirat-unicast")


@dataclass
class Packet:
    pid: int
    tx: int
    gen: int
    deadline_tx: int        # last TTI a copy may be transmitted in
    recorded: bool
    rx_ids: np.ndarray
    dist: np.ndarray
    # sidelink leg
    pc5_tti: np.ndarray | None = None
    pc5_acc: np.ndarray | None = None
    pc5_k: np.ndarray | None = None
    # cellular leg
    uu_tti: np.ndarray | None = None
    uu_acc: np.ndarray | None = None
    uu_dl: np.ndarray | None = None
    uu_ul: int = -1
    ul_log: list = field(default_factory=list)  # uplink attempt TTIs


class Simulation:
    def __init__(self, scn: Scenario):
        self.scn = scn
        self.rngs = RngStreams(scn.seed)
        geo = scn["geometry"]
        self.grid = build_grid(geo["blocks_x"], geo["blocks_y"], geo,
                               scn["bs"]["antenna_height_m"])
        self.fleet = drop_vehicles(self.grid, scn["density"], self.rngs,
                                   scn["mobility"]["speed_max_kmh"],
                                   scn.period_ms, scn["fixed_vehicles"])
        self.channel = ChannelModel(scn, self.grid, self.fleet, self.rngs)
        self.events = EventQueue(SimClock())
        self.mcs_table = load_table(scn["phy"]["mcs_table"])
        n_rb = int(scn["carriers"]["rbs_per_carrier"])
        self.ul_grid = ResourceGrid("uu-ul", n_rb)
        self.dl_grids = [ResourceGrid(f"uu-dl/{k}", n_rb)
                         for k in range(len(scn["bs"]["sector_azimuths_deg"]))]
        self.pc5_grid = ResourceGrid("pc5", n_rb)
        self.dl_sched = DownlinkScheduler(self.dl_grids, self.events)
        self.noise_ue_lin = 10.0 ** (self.channel.noise_ue_rb / 10.0)
        self.uu = UuPipeline(self) if scn.uses_uu() else None
        self.pc5 = Pc5Pipeline(self) if scn.uses_pc5() else None
        self.packets: list[Packet] = []
        self.record_radius = (float(scn["range"]) if scn.scheme in RANGE_COUPLED
                              else scn.record_range)

    # -- setup -----------------------------------------------------------

    def _traffic_plan(self) -> list[tuple[int, int, int]]:
        """(gen TTI, ue, packet id) for the whole run, in firing order."""
        period, dur = self.scn.period_ms, self.scn.duration_ms
        plan = sorted((int(g), ue)
                      for ue in range(self.fleet.n)
                      for g in range(int(self.fleet.phase_ms[ue]), dur, period))
        base = self.scn.seed * 1_000_000
        return [(g, ue, base + k) for k, (g, ue) in enumerate(plan)]

    # -- event handlers ----------------------------------------------------

    def _epoch(self, t: int) -> None:
        step_mobility(self.fleet, self.grid, self.scn["mobility"]["epoch_ms"], self.rngs)
        self.channel.refresh(t)

    def _generate(self, pid: int, ue: int, gen: int) -> None:
        scn = self.scn
        d = self.channel.distance_row(ue)
        ids = np.flatnonzero(d <= self.record_radius)
        ids = ids[ids != ue]
        pkt = Packet(pid, ue, gen, gen + scn.latency_bound_ms - 1,
                     gen >= scn.warmup_ms, ids, d[ids])
        k = ids.size
        if self.pc5 is not None:
            pkt.pc5_tti = np.full(k, -1, dtype=np.int64)
            pkt.pc5_acc = np.zeros(k)
            pkt.pc5_k = np.zeros(k, dtype=np.int16)
        if self.uu is not None:
            pkt.uu_tti = np.full(k, -1, dtype=np.int64)
            pkt.uu_dl = np.full(k, -1, dtype=np.int64)
            if self.uu.mode == "embms":
                pkt.uu_acc = np.zeros(k)
        self.packets.append(pkt)
        if self.pc5 is not None:
            self.pc5.launch(pkt)
        if self.uu is not None:
            self.uu.launch(pkt)

    # -- run --------------------------------------------------------------

    def run(self) -> RunResult:
        scn = self.scn
        horizon = scn.duration_ms + scn.latency_bound_ms + 1
        epoch = int(scn["mobility"]["epoch_ms"])
        for t in range(epoch, horizon + 1, epoch):
            self.events.schedule(t, lambda t=t: self._epoch(t))
        if self.uu is not None and self.uu.sps_enabled:
            self.uu.configure_sps()
        if self.pc5 is not None:
            self.pc5.configure_sps()
        for gen, ue, pid in self._traffic_plan():
            self.events.schedule(gen, lambda p=pid, u=ue, g=gen: self._generate(p, u, g))
        self.events.run()
        return self._finalize()

    def _finalize(self) -> RunResult:
        scn = self.scn
        store = RecordStore()
        core = self.uu.core_ms if self.uu is not None else -1
        for pkt in self.packets:
            if not pkt.recorded or pkt.rx_ids.size == 0:
                continue
            k = pkt.rx_ids.size
            ul = dl = winner = None
            if self.pc5 is not None and self.uu is not None:
                tti, winner = merge_arrays(pkt.pc5_tti, pkt.uu_tti)
                via_uu = winner == WINNER_UU
                ul = np.where(via_uu, pkt.uu_ul, -1)
                dl = np.where(via_uu, pkt.uu_dl, -1)
            elif self.uu is not None:
                tti = pkt.uu_tti
                ul = np.where(tti >= 0, pkt.uu_ul, -1)
                dl = np.where(tti >= 0, pkt.uu_dl, -1)
            else:
                tti = pkt.pc5_tti
            store.add_packet(pkt.pid, pkt.tx, pkt.rx_ids, pkt.dist, tti,
                             pkt.gen, ul, dl, core, winner)
        sr_events = []
        if self.uu is not None:
            sr_events += self.uu.ul_sched.sr_events
        if self.pc5 is not None:
            sr_events += self.pc5.sl.sr_events
        diags = {
            "n_vehicles": self.fleet.n,
            "n_packets": len(self.packets),
            "sr_count": len(sr_events),
            "clamp_flagged": self.channel.clamp_flagged,
        }
        return RunResult(scn.scheme, scn.seed, float(scn["range"]),
                         self.record_radius, scn.latency_bound_ms,
                         store.arrays(), scn.effective_config(), diags)

    # -- introspection -------------------------------------------------------

    def allocation_trace(self) -> list[tuple[int, str, str, str, str]]:
        """(tti, carrier, rb span, owner, purpose) rows, time-ordered."""
        horizon = self.scn.duration_ms + self.scn.latency_bound_ms
        rows = []
        grids = [self.ul_grid, *self.dl_grids, self.pc5_grid]
        for grid in grids:
            for t, allocs in grid._slots.items():
                rows.extend((t, grid.carrier, a) for a in allocs)
            for t, allocs in grid._overlap_ledger.items():
                rows.extend((t, grid.carrier, a) for a in allocs)
            for r in grid._reservations:
                for t in range(r.phase, horizon + 1, r.period):
                    rows.extend([(t, grid.carrier, r)])
        rows.sort(key=lambda r: (r[0], r[1], r[2].rb_lo))
        return [(t, carrier, f"{a.rb_lo}-{a.rb_lo + a.rb_count - 1}",
                 str(a.owner), a.purpose) for t, carrier, a in rows]


def run(scenario: Scenario) -> RunResult:
    """Simulate one scenario; identical inputs give identical records."""
    return Simulation(scenario).run()
