"""Large-scale radio models: pathloss presets, shadowing, sector gain, SINR.

Two pathloss presets ship with the package (constants are configuration,
documented in the README):

* "manhattan-grid" for vehicle-to-vehicle links at street level: LOS
  power law 41.0 + 22.7 log10(d) + 20 log10(f/5 GHz); around-corner NLOS
  adds diffraction loss driven by the two street legs (d1 to the corner,
  d2 after it), symmetrized by taking the better leg ordering.
* "urban-macro" for links to the rooftop site: two-slope LOS with a
  breakpoint, NLOS as max(LOS, 13.54 + 39.08 log10(d3D) + 20 log10(f_GHz)),
  and a distance-based LOS probability frozen per vehicle.

Transmit power is a constant spectral density: a transmitter using fewer
resource blocks radiates proportionally less total power.  All SINR math
here works on a per-RB basis; interference from partially overlapping
allocations is weighted by the overlap fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import Scenario
from .engine import RngStreams
from .environment import Fleet, Grid, classify_los_batch, torus_delta

THERMAL_DBM_HZ = -174.0


def noise_dbm(bw_hz: float, nf_db: float) -> float:
    """Thermal noise plus receiver noise figure over a bandwidth."""
    return THERMAL_DBM_HZ + 10.0 * math.log10(bw_hz) + nf_db


def sector_pattern_db(theta_deg, theta3db_deg: float = 70.0, att_max_db: float = 25.0):
    """Parabolic horizontal pattern: 0 dB at boresight, floored at -att_max."""
    theta = np.abs((np.asarray(theta_deg, dtype=float) + 180.0) % 360.0 - 180.0)
    return -np.minimum(12.0 * (theta / theta3db_deg) ** 2, att_max_db)


def sector_gain(az_deg: float, bs_xy, ue_xy, grid: Grid | None = None,
                gmax_dbi: float = 14.0, theta3db_deg: float = 70.0,
                att_max_db: float = 25.0) -> float:
    """Antenna gain of one sector toward a ground position (torus-aware)."""
    if grid is not None:
        d = torus_delta(grid, np.asarray(bs_xy, float), np.asarray(ue_xy, float))
    else:
        d = np.asarray(ue_xy, float) - np.asarray(bs_xy, float)
    bearing = math.degrees(math.atan2(d[1], d[0]))
    return gmax_dbi + float(sector_pattern_db(bearing - az_deg, theta3db_deg, att_max_db))


def pathloss_v2v_los(d_m, f_hz: float, ch: dict) -> np.ndarray:
    d = np.maximum(np.asarray(d_m, dtype=float), ch["v2v_min_dist_m"])
    return (ch["v2v_los_intercept"] + ch["v2v_los_slope"] * np.log10(d)
            + ch["v2v_freq_slope"] * np.log10(f_hz / 5.0e9))


def _v2v_corner_term(d1, d2, f_hz: float, ch: dict) -> np.ndarray:
    nj = np.maximum(2.8 - 0.0024 * d1, 1.84)
    return (pathloss_v2v_los(d1, f_hz, ch) + 20.0 - 12.5 * nj
            + 10.0 * nj * np.log10(np.maximum(d2, ch["v2v_min_dist_m"]))
            + ch["v2v_nlos_freq_slope"] * np.log10(f_hz / 5.0e9))


def pathloss_v2v_nlos(d1_m, d2_m, f_hz: float, ch: dict) -> np.ndarray:
    """Around-the-corner loss; better leg ordering wins so the link is reciprocal."""
    a = _v2v_corner_term(np.asarray(d1_m, float), np.asarray(d2_m, float), f_hz, ch)
    b = _v2v_corner_term(np.asarray(d2_m, float), np.asarray(d1_m, float), f_hz, ch)
    return np.minimum(a, b)


def uma_los_probability(d2d_m) -> np.ndarray:
    d = np.maximum(np.asarray(d2d_m, dtype=float), 1.0)
    return np.minimum(18.0 / d, 1.0) * (1.0 - np.exp(-d / 63.0)) + np.exp(-d / 63.0)


def pathloss_uma(d2d_m, f_hz: float, h_bs: float, h_ue: float, los) -> np.ndarray:
    """Two-slope LOS / max-form NLOS macro model; valid floor 10 m (clamped)."""
    d2d = np.maximum(np.asarray(d2d_m, dtype=float), 10.0)
    d3d = np.hypot(d2d, h_bs - h_ue)
    fghz = f_hz / 1e9
    bp = 4.0 * (h_bs - 1.0) * (h_ue - 1.0) * f_hz / 2.998e8
    pl1 = 28.0 + 22.0 * np.log10(d3d) + 20.0 * np.log10(fghz)
    pl2 = (28.0 + 40.0 * np.log10(d3d) + 20.0 * np.log10(fghz)
           - 9.0 * np.log10(bp ** 2 + (h_bs - h_ue) ** 2))
    pl_los = np.where(d2d <= bp, pl1, pl2)
    pl_nlos = np.maximum(pl_los, 13.54 + 39.08 * np.log10(d3d) + 20.0 * np.log10(fghz)
                         - 0.6 * (h_ue - 1.5))
    return np.where(np.asarray(los, dtype=bool), pl_los, pl_nlos)


def pathloss(tx, rx, carrier_hz: float, los: str, model: str = "manhattan-grid",
             d_split: tuple | None = None, ch: dict | None = None) -> float:
    """Scalar pathloss for one link; tx/rx are (x, y, height) triples.

    For the manhattan-grid NLOS case the two street legs must be supplied
    as d_split=(d1, d2).
    """
    ch = ch or dict(DEFAULT_V2V)
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    is_los = los == "los"
    if model == "manhattan-grid":
        if is_los:
            d = float(np.linalg.norm(rx[:2] - tx[:2]))
            return float(pathloss_v2v_los(d, carrier_hz, ch))
        if d_split is None:
            raise ValueError("manhattan-grid NLOS needs d_split=(d1, d2)")
        return float(pathloss_v2v_nlos(d_split[0], d_split[1], carrier_hz, ch))
    if model == "urban-macro":
        d2d = float(np.linalg.norm(rx[:2] - tx[:2]))
        return float(pathloss_uma(d2d, carrier_hz, tx[2], rx[2], is_los))
    raise ValueError(f"unknown pathloss model '{model}'")


DEFAULT_V2V = {
    "v2v_los_slope": 22.7,
    "v2v_los_intercept": 41.0,
    "v2v_freq_slope": 20.0,
    "v2v_nlos_freq_slope": 3.0,
    "v2v_min_dist_m": 3.0,
}


def shadowing(link_id: str, sigma_db: float, rngs: RngStreams) -> float:
    """Zero-mean log-normal shadowing, frozen per link for the whole run."""
    if sigma_db == 0.0:
        return 0.0
    return sigma_db * rngs.value(f"shadow/{link_id}")


def sinr_db(signal_dbm: float, interferers_dbm, noise_dbm_val: float) -> float:
    """signal / (noise + sum of interferers), all in dBm on equal bandwidth."""
    denom = math.fsum([10.0 ** (noise_dbm_val / 10.0)]
                      + [10.0 ** (i / 10.0) for i in interferers_dbm])
    return signal_dbm - 10.0 * math.log10(denom)


@dataclass
class LinkSample:
    tx: object
    rx: object
    tti: int
    rx_dbm: float            # desired power, per-RB basis
    interference_dbm: float  # total co-channel power, -inf when clean
    noise_dbm: float
    sinr_db: float

    @property
    def sinr_linear(self) -> float:
        return 10.0 ** (self.sinr_db / 10.0)


class ChannelModel:
    """Per-run link tables, rebuilt lazily after each mobility epoch.

    Every random draw is a pure function of (master seed, link identity), so
    query order never changes a link's realization.
    """

    def __init__(self, scn: Scenario, grid: Grid, fleet: Fleet, rngs: RngStreams):
        self.scn = scn
        self.grid = grid
        self.fleet = fleet
        self.rngs = rngs
        self.ch = scn["channel"]
        self.carriers = scn["carriers"]
        n_rb = self.carriers["rbs_per_carrier"]
        self.ue_psd_dbm = scn["ue"]["tx_power_dbm"] - 10.0 * math.log10(n_rb)
        self.bs_psd_dbm = scn["bs"]["power_dbm"] - 10.0 * math.log10(n_rb)
        self.noise_ue_rb = noise_dbm(self.carriers["rb_bandwidth_hz"], scn["ue"]["noise_figure_db"])
        self.noise_bs_rb = noise_dbm(self.carriers["rb_bandwidth_hz"], scn["bs"]["noise_figure_db"])
        self.azimuths = np.asarray(scn["bs"]["sector_azimuths_deg"], dtype=float)
        self.clamp_flagged = False

        n = fleet.n
        self._v2v_z = None           # frozen standard normals, [N,N] symmetric
        self._uu_z = np.array([rngs.value(f"shadow/uu/{i}") for i in range(n)])
        self._uu_losu = np.array([rngs.uniform(f"uma-los/{i}") for i in range(n)])
        self._epoch = -1
        self._v2v = None             # dict of per-epoch V2V arrays
        self._uu = None              # dict of per-epoch Uu arrays
        self._serving = None

    # -- epoch bookkeeping ------------------------------------------------

    def refresh(self, epoch_tti: int) -> None:
        self._epoch = epoch_tti
        self._v2v = None
        self._uu = None

    def distance_row(self, tx: int) -> np.ndarray:
        d = torus_delta(self.grid, self.fleet.pos[tx], self.fleet.pos)
        return np.linalg.norm(d, axis=1)

    # -- Uu side ----------------------------------------------------------

    def uu_tables(self) -> dict:
        if self._uu is not None:
            return self._uu
        pos = self.fleet.pos
        n = self.fleet.n
        d2d = np.linalg.norm(torus_delta(self.grid, self.grid.bs_xy, pos), axis=1)
        if np.any(d2d < 10.0) and not self.clamp_flagged:
            self.clamp_flagged = True
        los = self._uu_losu < uma_los_probability(d2d)
        pl = pathloss_uma(d2d, self.carriers["uu_freq_hz"],
                          self.grid.bs_height_m, self.scn["ue"]["antenna_height_m"], los)
        sigma = np.where(los, self.ch["shadow_sigma_uu_los"], self.ch["shadow_sigma_uu_nlos"])
        shadow = sigma * self._uu_z
        delta = torus_delta(self.grid, self.grid.bs_xy, pos)
        bearing = np.degrees(np.arctan2(delta[:, 1], delta[:, 0]))
        bs = self.scn["bs"]
        gains = np.empty((n, 3))
        for k, az in enumerate(self.azimuths):
            gains[:, k] = bs["sector_gain_dbi"] + sector_pattern_db(
                bearing - az, bs["theta_3db_deg"], bs["attenuation_max_db"])
        atten = pl[:, None] + shadow[:, None] - gains  # dB, tx psd to rx psd
        self._uu = {"d2d": d2d, "los": los, "pl": pl, "shadow": shadow,
                    "gains": gains, "atten": atten}
        return self._uu

    def serving_sector(self) -> np.ndarray:
        if self._serving is None:
            self._serving = np.argmin(self.uu_tables()["atten"], axis=1)
        return self._serving

    def ul_csi_per_rb_sinr(self, ue: int) -> float:
        """Uplink per-RB SINR at the serving sector, no co-channel interference."""
        t = self.uu_tables()
        sec = int(self.serving_sector()[ue])
        return self.ue_psd_dbm - float(t["atten"][ue, sec]) - self.noise_bs_rb

    def dl_rx_psd_dbm(self, ue: int, sector: int) -> float:
        return self.bs_psd_dbm - float(self.uu_tables()["atten"][ue, sector])

    # -- PC5 side ----------------------------------------------------------

    def _v2v_frozen_z(self) -> np.ndarray:
        if self._v2v_z is None:
            n = self.fleet.n
            z = np.zeros((n, n))
            for i in range(n):
                for j in range(i + 1, n):
                    z[i, j] = z[j, i] = self.rngs.value(f"shadow/v2v/{i}/{j}")
            self._v2v_z = z
        return self._v2v_z

    def v2v_tables(self) -> dict:
        """Full pairwise V2V attenuation (pathloss + shadowing), dB."""
        if self._v2v is not None:
            return self._v2v
        pos = self.fleet.pos
        n = self.fleet.n
        iu, ju = np.triu_indices(n, k=1)
        los, d1, d2 = classify_los_batch(self.grid, pos[iu], pos[ju])
        f = self.carriers["pc5_freq_hz"]
        pl_pairs = np.where(
            los,
            pathloss_v2v_los(d1, f, self.ch),
            pathloss_v2v_nlos(d1, d2, f, self.ch),
        )
        sigma = np.where(los, self.ch["shadow_sigma_v2v_los"], self.ch["shadow_sigma_v2v_nlos"])
        z = self._v2v_frozen_z()
        atten_pairs = pl_pairs + sigma * z[iu, ju]

        dist = np.zeros((n, n))
        atten = np.full((n, n), np.inf)
        losm = np.zeros((n, n), dtype=bool)
        dvec = np.linalg.norm(torus_delta(self.grid, pos[iu], pos[ju]), axis=1)
        dist[iu, ju] = dist[ju, iu] = dvec
        atten[iu, ju] = atten[ju, iu] = atten_pairs
        losm[iu, ju] = losm[ju, iu] = los
        self._v2v = {"dist": dist, "atten": atten, "los": losm}
        return self._v2v

    def pc5_rx_psd_dbm(self, tx: int, rx: int) -> float:
        return self.ue_psd_dbm - float(self.v2v_tables()["atten"][tx, rx])

    # -- generic SINR ------------------------------------------------------

    def compute_sinr(self, rx_id, desired_tx, co_txs, carrier: str, tti: int) -> LinkSample:
        """LinkSample for one reception.

        rx_id: vehicle index, or "bs" for the uplink receiver.
        desired_tx: vehicle index (PC5/uplink) or ("bs", sector) for downlink.
        co_txs: iterable of (tx, overlap_fraction) pairs co-scheduled on the carrier.
        carrier: "uu-ul" | "uu-dl" | "pc5".
        """
        sig = self._rx_psd(rx_id, desired_tx, carrier)
        noise = self.noise_bs_rb if rx_id == "bs" else self.noise_ue_rb
        parts = []
        for tx, w in co_txs:
            if w <= 0.0:
                continue
            parts.append(self._rx_psd(rx_id, tx, carrier) + 10.0 * math.log10(w))
        interference = (10.0 * math.log10(math.fsum(10.0 ** (p / 10.0) for p in parts))
                        if parts else -math.inf)
        s = sinr_db(sig, parts, noise)
        return LinkSample(tx=desired_tx, rx=rx_id, tti=tti, rx_dbm=sig,
                          interference_dbm=interference, noise_dbm=noise, sinr_db=s)

    def _rx_psd(self, rx_id, tx, carrier: str) -> float:
        if carrier == "pc5":
            return self.pc5_rx_psd_dbm(int(tx), int(rx_id))
        if carrier == "uu-dl":
            sector = int(tx[1]) if isinstance(tx, tuple) else int(tx)
            return self.dl_rx_psd_dbm(int(rx_id), sector)
        if carrier == "uu-ul":
            t = self.uu_tables()
            sec = int(self.serving_sector()[int(tx)])
            return self.ue_psd_dbm - float(t["atten"][int(tx), sec])
        raise ValueError(f"unknown carrier '{carrier}'")
