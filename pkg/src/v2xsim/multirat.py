"""Duplication over both radios with earliest-arrival resolution.

The sender launches the same payload on the sidelink and the cellular leg
at generation time; neither leg knows about the other, and each runs its
own scheduling and combining exactly as it would alone. A receiver keeps
whichever arrival comes first. Ties go to the sidelink copy, which needs
no infrastructure round trip.
"""

from __future__ import annotations

import numpy as np

WINNER_NONE, WINNER_PC5, WINNER_UU = 0, 1, 2


def merge_outcomes(pc5_latency_ms, uu_latency_ms) -> tuple[bool, int | None, str]:
    """Resolve one receiver's pair of leg outcomes.

    Latencies are in ms; None marks a failed leg. Returns (delivered,
    latency, winner) with winner one of "pc5", "uu", "".
    """
    if pc5_latency_ms is None and uu_latency_ms is None:
        return False, None, ""
    if uu_latency_ms is None or (pc5_latency_ms is not None
                                 and pc5_latency_ms <= uu_latency_ms):
        return True, pc5_latency_ms, "pc5"
    return True, uu_latency_ms, "uu"


def merge_arrays(pc5_tti: np.ndarray, uu_tti: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vector form over one packet's receivers: (delivery TTI, winner code).

    Delivery TTIs are -1 for a failed leg; the earlier success wins and a
    tie goes to the sidelink.
    """
    p = np.where(pc5_tti < 0, np.iinfo(np.int64).max, pc5_tti)
    u = np.where(uu_tti < 0, np.iinfo(np.int64).max, uu_tti)
    best = np.minimum(p, u)
    tti = np.where(best == np.iinfo(np.int64).max, -1, best)
    winner = np.where(tti < 0, WINNER_NONE,
                      np.where(p <= u, WINNER_PC5, WINNER_UU))
    return tti.astype(pc5_tti.dtype), winner.astype(np.int8)
