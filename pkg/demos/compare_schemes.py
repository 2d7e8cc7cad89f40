#!/usr/bin/env python3
"""
compare_schemes.py: all five delivery schemes on one shared world.

Same density, same seed, same 200 m target range. The table shows the
trade the schemes make: the sidelink is fast but range-limited, cellular
broadcast covers the cell at a fixed latency floor, cellular unicast
buckles when every receiver needs its own downlink copy, and the
duplicated schemes keep the better leg's delivery at the faster leg's
latency.
"""

import numpy as np

from v2xsim import SCHEMES, apply_overrides, compute_prr, load_scenario, run

if __name__ == "__main__":
    base = load_scenario("{}")
    base = apply_overrides(base, [
        "density=250", "range=200", "duration=5", "warmup=1", "seed=1",
    ])

    print(f"{'scheme':<20} {'PRR':>6} {'median ms':>10} {'p95 ms':>7}")
    for scheme in SCHEMES:
        res = run(apply_overrides(base, [f"scheme={scheme}"]))
        prr = compute_prr(res)[0].prr
        lat = res.records["latency_ms"]
        lat = lat[res.records["delivered"] == 1]
        med, p95 = np.percentile(lat, [50, 95])
        print(f"{scheme:<20} {prr:>6.3f} {med:>10.0f} {p95:>7.0f}")
