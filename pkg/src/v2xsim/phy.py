"""Link-level abstractions: MCS table, transport blocks, MRC, decode, HARQ.

Copies of one packet are soft-combined by summing their linear SINRs; the
running sum is kept as an exact compensated sum over the per-copy log, so
any permutation of the same copy set yields the identical combined value.

Decoding uses a step threshold at each MCS entry's 10%-BLER SINR point by
default (boundary inclusive).  The optional "curve" model draws against
BLER = min(1, 0.1 * 10^-((sinr - threshold) / slope)) instead.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from importlib import resources

RB_BANDWIDTH_HZ = 180e3
TTI_S = 1e-3


@dataclass(frozen=True)
class McsEntry:
    cqi: int
    modulation: str
    efficiency: float     # bit/Hz
    threshold_db: float   # SINR giving 10% BLER

    def bits_per_rb(self, rb_bandwidth_hz: float = RB_BANDWIDTH_HZ, tti_s: float = TTI_S) -> float:
        return self.efficiency * rb_bandwidth_hz * tti_s


class McsTable:
    def __init__(self, entries: list[McsEntry]):
        if not entries:
            raise ValueError("MCS table is empty")
        self.entries = sorted(entries, key=lambda e: e.cqi)
        for a, b in zip(self.entries, self.entries[1:]):
            if not (b.efficiency > a.efficiency and b.threshold_db > a.threshold_db):
                raise ValueError(f"MCS table not strictly increasing at cqi {b.cqi}")
        self._by_cqi = {e.cqi: e for e in self.entries}

    def __len__(self) -> int:
        return len(self.entries)

    def by_cqi(self, cqi: int) -> McsEntry:
        return self._by_cqi[cqi]

    def select(self, csi_sinr_db: float) -> McsEntry:
        """Highest-efficiency entry decodable at the reported SINR (boundary in)."""
        best = None
        for e in self.entries:
            if e.threshold_db <= csi_sinr_db:
                best = e
        return best if best is not None else self.entries[0]

    @classmethod
    def from_csv_text(cls, text: str) -> "McsTable":
        rows = list(csv.DictReader(text.splitlines()))
        return cls([McsEntry(cqi=int(r["cqi"]), modulation=r["modulation"],
                             efficiency=float(r["efficiency"]),
                             threshold_db=float(r["threshold_db"])) for r in rows])

    @classmethod
    def from_csv(cls, path: str) -> "McsTable":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_csv_text(fh.read())


def default_table() -> McsTable:
    text = resources.files("v2xsim.data").joinpath("mcs_table.csv").read_text(encoding="utf-8")
    return McsTable.from_csv_text(text)


def load_table(spec: str) -> McsTable:
    return default_table() if spec == "default" else McsTable.from_csv(spec)


def transport_block_rbs(payload_bytes: int, mcs: McsEntry,
                        rb_bandwidth_hz: float = RB_BANDWIDTH_HZ, tti_s: float = TTI_S) -> int:
    """Resource blocks needed for one payload at one MCS within a TTI.

    Counts above the carrier width imply multi-TTI segmentation; the caller
    owns that split.
    """
    if payload_bytes <= 0:
        raise ValueError("payload must be positive")
    return math.ceil(payload_bytes * 8 / (mcs.efficiency * rb_bandwidth_hz * tti_s))


def select_uplink_mcs(csi_sinr_db: float, table: McsTable) -> McsEntry:
    return table.select(csi_sinr_db)


@dataclass
class ReceptionState:
    """Per (packet, receiver) soft-combining accumulator."""

    packet_id: int
    rx_id: object
    copy_log: list[float] = field(default_factory=list)  # linear SINR per copy

    @property
    def k(self) -> int:
        return len(self.copy_log)

    @property
    def mrc_linear(self) -> float:
        return math.fsum(self.copy_log)

    @property
    def mrc_sinr_db(self) -> float:
        s = self.mrc_linear
        return 10.0 * math.log10(s) if s > 0.0 else -math.inf

    def add_copy_db(self, sinr_db: float) -> float:
        self.copy_log.append(10.0 ** (sinr_db / 10.0))
        return self.mrc_sinr_db

    def add_copy_linear(self, sinr_linear: float) -> float:
        self.copy_log.append(float(sinr_linear))
        return self.mrc_sinr_db


def mrc_combine(state: ReceptionState, new_copy_sinr_db: float) -> float:
    """Fold one more copy into the state; returns the combined SINR in dB."""
    return state.add_copy_db(new_copy_sinr_db)


def bler_curve(sinr_db: float, threshold_db: float, slope_db_per_decade: float = 1.0) -> float:
    return min(1.0, 0.1 * 10.0 ** (-(sinr_db - threshold_db) / slope_db_per_decade))


def decode(state: ReceptionState, mcs: McsEntry, rng=None,
           model: str = "step", slope_db_per_decade: float = 1.0) -> bool:
    """One decode attempt on the current combined SINR.

    rng: ignored by the step model; a Generator or a pre-drawn uniform in
    [0,1) for the curve model.
    """
    if state.k < 1:
        raise ValueError("decode needs at least one received copy")
    sinr = state.mrc_sinr_db
    if model == "step":
        return sinr >= mcs.threshold_db
    if model == "curve":
        bler = bler_curve(sinr, mcs.threshold_db, slope_db_per_decade)
        u = rng if isinstance(rng, float) else float(rng.uniform())
        return u >= bler
    raise ValueError(f"unknown BLER model '{model}'")


class HarqExhausted(Exception):
    """All transmission attempts spent without a successful decode."""


@dataclass
class HarqProcess:
    packet_id: int
    max_attempts: int = 4
    gap_ms: int = 7
    attempts: int = 0
    last_end: int | None = None
    log: list[tuple[int, int]] = field(default_factory=list)  # (start, end) per attempt

    def record_attempt(self, start: int, end: int) -> None:
        if self.last_end is not None and start < self.last_end:
            raise ValueError("attempt starts before the previous one ended")
        self.attempts += 1
        self.last_end = end
        self.log.append((start, end))

    @property
    def exhausted(self) -> bool:
        return self.attempts >= self.max_attempts


def harq_next_attempt(proc: HarqProcess, nack_time: int) -> int:
    """Start TTI of the retransmission after a NACK: exactly gap_ms after the end.

    Raises HarqExhausted once max_attempts have been made.
    """
    if proc.exhausted:
        raise HarqExhausted(f"packet {proc.packet_id}: {proc.attempts} attempts spent")
    if proc.last_end is None:
        raise ValueError("no prior attempt recorded")
    return proc.last_end + proc.gap_ms
