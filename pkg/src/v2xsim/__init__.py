"""System-level simulator for vehicular message dissemination.

Compares five delivery schemes over a shared synthetic city: cellular
unicast, cellular broadcast, direct sidelink, and duplication of the
sidelink with either cellular variant. One call to `run` simulates a
scenario end to end and returns per-pair delivery records; `metrics`
turns those into PRR points, latency CDFs, and range sweeps.
"""

from .config import (SCHEMES, ConfigError, Scenario, apply_overrides,
                     load_scenario, load_scenario_file)
from .engine import EventQueue, RngStreams, SchedulingError, SimClock
from .metrics import (PrrPoint, RunResult, compute_prr, latency_cdf,
                      relevant_rx_set, sweep_ranges)
from .sim import Simulation, run

__version__ = "0.1.0"

__all__ = [
    "SCHEMES", "ConfigError", "Scenario", "apply_overrides", "load_scenario",
    "load_scenario_file", "EventQueue", "RngStreams", "SchedulingError",
    "SimClock", "PrrPoint", "RunResult", "compute_prr", "latency_cdf",
    "relevant_rx_set", "sweep_ranges", "Simulation", "run", "__version__",
]
