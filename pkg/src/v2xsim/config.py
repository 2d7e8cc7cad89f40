"""Scenario configuration: JSON loading, defaults, validation, effective echo.

A scenario file is a JSON document.  Unknown keys are rejected with the key
name; range violations name the offending key.  The fully-resolved scenario
(all defaults applied) can be echoed back as a dict for reproducibility.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from typing import Any

SCHEMES = ("uu-unicast", "uu-multicast", "pc5", "multirat-unicast", "multirat-multicast")

DEFAULTS: dict[str, Any] = {
    # experiment
    "scheme": "pc5",
    "density": 500.0,          # vehicles per km^2
    "range": 200.0,            # target communication range R, m
    "duration": 5.0,           # simulated seconds, packets generated in [0, duration)
    "warmup": 1.0,             # seconds excluded from metrics
    "seed": 1,                 # master seed
    "latency_bound": 100,      # L, ms; PRR counts deliveries with latency <= L
    "record_range": None,      # score receivers out to this distance (>= range); None -> range
    "geometry": {
        "blocks_x": 1,
        "blocks_y": 1,
        "lattice_cols": 4,     # cells per block, x
        "lattice_rows": 5,     # cells per block, y
        "building_m": 120.0,   # square building edge
        "street_m": 21.0,      # street width between cells
        "building_height_m": 25.0,
        "park_col": 3,         # lattice column holding the park
        "park_row": None,      # None -> park spans the whole column (one tall rectangle)
    },
    "bs": {
        "antenna_height_m": 25.0,   # rooftop of the central building
        "power_dbm": 46.0,          # total over the 10 MHz downlink, per sector
        "noise_figure_db": 5.0,
        "sector_gain_dbi": 14.0,
        "sector_azimuths_deg": [0.0, 120.0, 240.0],
        "theta_3db_deg": 70.0,
        "attenuation_max_db": 25.0,
    },
    "ue": {
        "tx_power_dbm": 24.0,       # total per 10 MHz, constant PSD when fewer RBs are used
        "noise_figure_db": 9.0,
        "antenna_height_m": 1.5,
    },
    "carriers": {
        "uu_freq_hz": 2.0e9,
        "pc5_freq_hz": 5.9e9,
        "rb_bandwidth_hz": 180e3,
        "rbs_per_carrier": 50,      # per 10 MHz grid (uplink, downlink, PC5 each)
    },
    "traffic": {
        "packet_bytes": 212,
        "rate_hz": 10.0,
    },
    "mac": {
        "sps_enabled": True,
        "sr_period_ms": 5,
        "bs_proc_ms": 3,
        "grant_gap_ms": 3,
        "dl_proc_ms": 2,
        "core_delay_ms": 1,
        "harq_max_attempts": 4,
        "harq_gap_ms": 7,
        "embms_repetitions": 2,
        "pc5_repetitions": 2,
        "sidelink_mode": 3,         # 3 = BS scheduled, 4 = autonomous selection
        "mode4_window_ms": 100,
    },
    "phy": {
        "mcs_table": "default",     # packaged CSV, or a path to one
        "pc5_cqi": 4,
        "embms_cqi": 5,
        "bler_model": "step",       # "step" or "curve"
        "bler_curve_db_per_decade": 1.0,
    },
    "channel": {
        "v2v_preset": "manhattan-grid",
        "v2v_los_slope": 22.7,      # dB per decade of distance
        "v2v_los_intercept": 41.0,  # dB at 1 m, 5 GHz reference
        "v2v_freq_slope": 20.0,     # dB per decade of (f / 5 GHz)
        "v2v_nlos_freq_slope": 3.0,
        "v2v_min_dist_m": 3.0,
        "uu_preset": "urban-macro",
        "shadow_sigma_v2v_los": 3.0,
        "shadow_sigma_v2v_nlos": 4.0,
        "shadow_sigma_uu_los": 4.0,
        "shadow_sigma_uu_nlos": 6.0,
    },
    "mobility": {
        "epoch_ms": 100,
        "speed_max_kmh": 50.0,
    },
    # test hook: fixed topology instead of random drop.  Each entry:
    # [x, y, speed_kmh] or [x, y, speed_kmh, traffic_phase_ms]
    "fixed_vehicles": None,
}


class ConfigError(ValueError):
    """Configuration parse or validation failure; message names the key."""


@dataclass
class Scenario:
    """Fully resolved experiment configuration."""

    params: dict[str, Any] = field(default_factory=lambda: copy.deepcopy(DEFAULTS))

    def __getitem__(self, key: str) -> Any:
        return self.params[key]

    @property
    def scheme(self) -> str:
        return self.params["scheme"]

    @property
    def seed(self) -> int:
        return int(self.params["seed"])

    @property
    def duration_ms(self) -> int:
        return int(round(self.params["duration"] * 1000))

    @property
    def warmup_ms(self) -> int:
        return int(round(self.params["warmup"] * 1000))

    @property
    def latency_bound_ms(self) -> int:
        return int(self.params["latency_bound"])

    @property
    def period_ms(self) -> int:
        return int(round(1000.0 / self.params["traffic"]["rate_hz"]))

    @property
    def record_range(self) -> float:
        rr = self.params["record_range"]
        return float(self.params["range"]) if rr is None else float(rr)

    def uses_uu(self) -> bool:
        return self.scheme != "pc5"

    def uses_pc5(self) -> bool:
        return self.scheme in ("pc5", "multirat-unicast", "multirat-multicast")

    def uu_mode(self) -> str | None:
        if self.scheme in ("uu-unicast", "multirat-unicast"):
            return "unicast"
        if self.scheme in ("uu-multicast", "multirat-multicast"):
            return "embms"
        return None

    def effective_config(self) -> dict[str, Any]:
        """Echo of the full configuration with every default resolved."""
        return copy.deepcopy(self.params)

    def replace(self, **top_level: Any) -> "Scenario":
        """New Scenario with top-level keys replaced (used by sweeps)."""
        merged = copy.deepcopy(self.params)
        for k, v in top_level.items():
            if k not in merged:
                raise ConfigError(f"unknown key '{k}'")
            merged[k] = v
        return _validated(merged)


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown key '{where}'")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, where)
        else:
            out[key] = val
    return out


def _require(cond: bool, msg: str) -> None:
    if not cond:
        raise ConfigError(msg)


def _validated(params: dict[str, Any]) -> Scenario:
    _require(params["density"] > 0, "density must be positive")
    _require(params["range"] > 0, "range must be positive")
    _require(params["latency_bound"] > 0, "latency_bound must be positive")
    _require(params["warmup"] >= 0, "warmup must be non-negative")
    _require(params["duration"] > params["warmup"], "duration must exceed warmup")
    _require(
        params["scheme"] in SCHEMES,
        f"scheme must be one of {', '.join(SCHEMES)} (got '{params['scheme']}')",
    )
    rr = params["record_range"]
    _require(rr is None or rr >= params["range"], "record_range must be >= range")
    geo = params["geometry"]
    _require(geo["blocks_x"] >= 1 and geo["blocks_y"] >= 1, "geometry.blocks_x/blocks_y must be >= 1")
    _require(geo["building_m"] > 0, "geometry.building_m must be positive")
    _require(geo["street_m"] > 0, "geometry.street_m must be positive")
    _require(
        0 <= geo["park_col"] < geo["lattice_cols"],
        "geometry.park_col must index a lattice column",
    )
    if geo["park_row"] is not None:
        _require(
            0 <= geo["park_row"] < geo["lattice_rows"],
            "geometry.park_row must index a lattice row",
        )
    _require(params["traffic"]["rate_hz"] > 0, "traffic.rate_hz must be positive")
    _require(params["traffic"]["packet_bytes"] > 0, "traffic.packet_bytes must be positive")
    mac = params["mac"]
    _require(mac["harq_max_attempts"] >= 1, "mac.harq_max_attempts must be >= 1")
    _require(mac["embms_repetitions"] >= 1, "mac.embms_repetitions must be >= 1")
    _require(mac["pc5_repetitions"] >= 1, "mac.pc5_repetitions must be >= 1")
    _require(mac["sidelink_mode"] in (3, 4), "mac.sidelink_mode must be 3 or 4")
    _require(params["mobility"]["epoch_ms"] > 0, "mobility.epoch_ms must be positive")
    period = 1000.0 / params["traffic"]["rate_hz"]
    _require(
        abs(period - round(period)) < 1e-9,
        "traffic.rate_hz must divide 1000 ms into whole TTIs",
    )
    return Scenario(params=params)


def load_scenario(config_text: str) -> Scenario:
    """Parse a JSON scenario document, apply defaults, and validate."""
    try:
        raw = json.loads(config_text) if config_text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return _validated(_merge(DEFAULTS, raw))


def load_scenario_file(path: str) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        return load_scenario(fh.read())


def _parse_scalar(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text  # bare string, e.g. scheme=pc5


def apply_overrides(scenario: Scenario, overrides: list[str]) -> Scenario:
    """Apply `key=value` / `group.key=value` overrides on a resolved scenario."""
    params = scenario.effective_config()
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override '{item}' must have the form key=value")
        key, _, value = item.partition("=")
        parts = key.strip().split(".")
        node = params
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"unknown key '{key}'")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node:
            raise ConfigError(f"unknown key '{key}'")
        node[leaf] = _parse_scalar(value.strip())
    return _validated(params)
