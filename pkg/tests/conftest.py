"""Shared scenario builders for the test suite.

The desk-scale world is a 4x4 cell lattice of 100 m buildings on 25 m
streets: exactly 0.25 km^2 on the torus, with the park at cell (3,3) and
the base station on the rooftop nearest the center. Downlink power is
11 dBm there so the broadcast leg sits in the high-but-imperfect PRR
region where diversity gains are visible.
"""

import pytest

from v2xsim import Scenario, apply_overrides

# one line per acceptance criterion, printed uncaptured at session end
ACCEPTANCE_REPORT: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_REPORT:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_REPORT:
            terminalreporter.write_line(line)

DESK = [
    "geometry.lattice_cols=4",
    "geometry.lattice_rows=4",
    "geometry.building_m=100",
    "geometry.street_m=25",
    "geometry.park_col=3",
    "geometry.park_row=3",
    "bs.power_dbm=11",
    "range=200",
    "duration=5",
    "warmup=1",
]


def desk_scenario(*extra: str) -> Scenario:
    return apply_overrides(Scenario(), DESK + list(extra))


def tiny_scenario(*extra: str) -> Scenario:
    """Fast variant for functional checks: same world, 1.5 s, low density."""
    return apply_overrides(Scenario(), DESK + ["duration=1.5", "warmup=0.5",
                                               "density=150"] + list(extra))


@pytest.fixture(scope="session")
def desk():
    return desk_scenario


@pytest.fixture(scope="session")
def tiny():
    return tiny_scenario
