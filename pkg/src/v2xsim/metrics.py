"""Delivery records, PRR, latency CDFs, range sweeps, CSV output.

Records are columnar numpy arrays, one row per (packet, relevant receiver)
pair.  PRR counts deliveries with latency <= L over all relevant pairs;
the latency CDF is denominated by all relevant pairs as well, so a curve
saturates at the scheme's PRR rather than at 1.

Range sweeps re-score a single trace for schemes whose transmissions do not
depend on the target range (pc5 and the multicast schemes: relevance is a
pure scoring filter there) and re-simulate per range for unicast-bearing
schemes, whose downlink load grows with the receiver count.

Distance and latency comparisons are boundary inclusive throughout.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

RECORD_COLUMNS = ("packet_id", "tx_id", "rx_id", "scheme", "delivered", "latency_ms",
                  "ul_ms", "core_ms", "dl_ms", "winner", "distance_m")

RESCORABLE = ("pc5", "uu-multicast", "multirat-multicast")

_WINNERS = {0: "", 1: "pc5", 2: "uu"}


class RecordStore:
    """Append-only per-packet chunks, concatenated on demand."""

    def __init__(self) -> None:
        self._chunks: list[dict[str, np.ndarray]] = []

    def add_packet(self, pid: int, tx: int, rx_ids: np.ndarray, dist: np.ndarray,
                   delivered_tti: np.ndarray, gen: int,
                   ul: np.ndarray | None = None, dl: np.ndarray | None = None,
                   core: int = -1, winner: np.ndarray | None = None) -> None:
        k = rx_ids.shape[0]
        if k == 0:
            return
        lat = np.where(delivered_tti >= 0, delivered_tti - gen, -1).astype(np.int32)
        ul_arr = (ul if ul is not None else np.full(k, -1)).astype(np.int32)
        self._chunks.append({
            "packet_id": np.full(k, pid, dtype=np.int64),
            "tx_id": np.full(k, tx, dtype=np.int32),
            "rx_id": rx_ids.astype(np.int32),
            "delivered": (delivered_tti >= 0).astype(np.int8),
            "latency_ms": lat,
            "ul_ms": ul_arr,
            # the core hop applies exactly where an uplink component exists
            "core_ms": np.where(ul_arr >= 0, core, -1).astype(np.int32),
            "dl_ms": (dl if dl is not None else np.full(k, -1)).astype(np.int32),
            "winner": (winner if winner is not None else np.zeros(k)).astype(np.int8),
            "distance_m": dist.astype(np.float64),
        })

    def arrays(self) -> dict[str, np.ndarray]:
        if not self._chunks:
            return {c: np.zeros(0, dtype=np.int64 if c != "distance_m" else np.float64)
                    for c in RECORD_COLUMNS if c != "scheme"}
        return {key: np.concatenate([c[key] for c in self._chunks])
                for key in self._chunks[0]}


@dataclass
class RunResult:
    scheme: str
    seed: int
    range_m: float
    record_range_m: float
    latency_bound_ms: int
    records: dict[str, np.ndarray]
    config: dict = field(default_factory=dict)
    diags: dict = field(default_factory=dict)

    def pair_mask(self, range_m: float | None = None) -> np.ndarray:
        r = self.range_m if range_m is None else range_m
        if r > self.record_range_m:
            raise ValueError(f"range {r} exceeds recorded range {self.record_range_m}")
        return self.records["distance_m"] <= r


@dataclass
class PrrPoint:
    range_m: float
    scheme: str
    prr: float
    n: int
    seed: int | None = None


def relevant_rx_set(tx_id: int, positions: np.ndarray, r: float, grid=None) -> np.ndarray:
    """Receiver ids within distance R of the transmitter (boundary inclusive)."""
    if grid is not None:
        from .environment import torus_distance
        d = torus_distance(grid, positions[tx_id], positions)
    else:
        d = np.linalg.norm(positions - positions[tx_id], axis=1)
    ids = np.flatnonzero(d <= r)
    return ids[ids != tx_id]


def _as_list(results) -> list[RunResult]:
    return list(results) if isinstance(results, (list, tuple)) else [results]


def compute_prr(results, latency_bound_ms: int | None = None,
                range_m: float | None = None) -> list[PrrPoint]:
    """One PrrPoint per scheme, pooled over the given runs."""
    runs = _as_list(results)
    if not runs or all(r.records["packet_id"].size == 0 for r in runs):
        raise ValueError("no samples")
    by_scheme: dict[str, list[tuple[int, int]]] = {}
    r_used: dict[str, float] = {}
    for run in runs:
        mask = run.pair_mask(range_m)
        bound = run.latency_bound_ms if latency_bound_ms is None else latency_bound_ms
        rec = run.records
        ok = (rec["delivered"][mask] == 1) & (rec["latency_ms"][mask] >= 0) \
             & (rec["latency_ms"][mask] <= bound)
        by_scheme.setdefault(run.scheme, []).append((int(ok.sum()), int(mask.sum())))
        r_used[run.scheme] = run.range_m if range_m is None else range_m
    out = []
    for scheme, counts in by_scheme.items():
        hits = sum(h for h, _ in counts)
        n = sum(n for _, n in counts)
        if n == 0:
            raise ValueError("no samples")
        out.append(PrrPoint(r_used[scheme], scheme, hits / n, n))
    return out


def latency_cdf(results, range_m: float | None = None) -> dict[str, tuple[np.ndarray, np.ndarray]]:
    """Per scheme: (latency values, cumulative fraction of ALL relevant pairs)."""
    runs = _as_list(results)
    if not runs:
        raise ValueError("no samples")
    lat_by_scheme: dict[str, list[np.ndarray]] = {}
    denom: dict[str, int] = {}
    for run in runs:
        mask = run.pair_mask(range_m)
        rec = run.records
        lats = rec["latency_ms"][mask]
        lat_by_scheme.setdefault(run.scheme, []).append(lats[lats >= 0])
        denom[run.scheme] = denom.get(run.scheme, 0) + int(mask.sum())
    out = {}
    for scheme, parts in lat_by_scheme.items():
        if denom[scheme] == 0:
            raise ValueError("no samples")
        lats = np.sort(np.concatenate(parts))
        if lats.size == 0:
            out[scheme] = (np.zeros(0), np.zeros(0))
            continue
        vals, counts = np.unique(lats, return_counts=True)
        out[scheme] = (vals, np.cumsum(counts) / denom[scheme])
    return out


def sweep_ranges(scenario, ranges=(100.0, 150.0, 200.0, 250.0, 300.0),
                 seeds=(1,)) -> tuple[list[PrrPoint], list[RunResult]]:
    """PRR per (range, seed) for the scenario's scheme.

    Schemes whose physics ignore the target range run once per seed at the
    widest range and are re-scored; the others re-simulate per range.
    """
    from .sim import run  # local import: metrics stays importable standalone

    ranges = sorted(float(r) for r in ranges)
    if not ranges:
        raise ValueError("ranges must be non-empty")
    points: list[PrrPoint] = []
    results: list[RunResult] = []
    if scenario.scheme in RESCORABLE:
        base = scenario.replace(range=ranges[-1], record_range=ranges[-1])
        for seed in seeds:
            res = run(base.replace(seed=seed))
            results.append(res)
            for r in ranges:
                p = compute_prr(res, range_m=r)[0]
                points.append(PrrPoint(r, res.scheme, p.prr, p.n, seed))
    else:
        for seed in seeds:
            for r in ranges:
                res = run(scenario.replace(seed=seed, range=r, record_range=None))
                results.append(res)
                p = compute_prr(res)[0]
                points.append(PrrPoint(r, res.scheme, p.prr, p.n, seed))
    return points, results


# -- CSV output -----------------------------------------------------------

def records_csv(results) -> str:
    buf = io.StringIO()
    buf.write(",".join(RECORD_COLUMNS) + "\n")
    for run in _as_list(results):
        rec = run.records
        n = rec["packet_id"].size
        lat = rec["latency_ms"]
        comps = (rec["ul_ms"], rec["core_ms"], rec["dl_ms"])
        for i in range(n):
            parts = [
                str(rec["packet_id"][i]), str(rec["tx_id"][i]), str(rec["rx_id"][i]),
                run.scheme, str(rec["delivered"][i]),
                str(lat[i]) if lat[i] >= 0 else "",
            ]
            parts += [str(c[i]) if c[i] >= 0 else "" for c in comps]
            parts.append(_WINNERS[int(rec["winner"][i])])
            parts.append(f"{rec['distance_m'][i]:.3f}")
            buf.write(",".join(parts) + "\n")
    return buf.getvalue()


def cdf_csv(results, range_m: float | None = None) -> str:
    buf = io.StringIO()
    buf.write("scheme,latency_ms,cum_frac\n")
    curves = latency_cdf(_as_list(results), range_m)
    for scheme in sorted(curves):
        vals, fracs = curves[scheme]
        for v, f in zip(vals, fracs):
            buf.write(f"{scheme},{int(v)},{f:.6f}\n")
    return buf.getvalue()


def prr_csv(points: list[PrrPoint]) -> str:
    buf = io.StringIO()
    buf.write("scheme,range_m,prr,n,seed\n")
    for p in points:
        seed = "" if p.seed is None else str(p.seed)
        buf.write(f"{p.scheme},{p.range_m:g},{p.prr:.6f},{p.n},{seed}\n")
    return buf.getvalue()
