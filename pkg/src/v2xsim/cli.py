"""Batch front-end: single runs, seed replication, range sweeps, CSV output.

Precedence for configuration, lowest to highest: built-in defaults, the
--config file, V2XSIM_* environment variables, then --set flags. An
environment variable maps to a config key by stripping the prefix,
lowercasing, and turning "__" into ".": V2XSIM_MAC__SPS_ENABLED=false is
the same as --set mac.sps_enabled=false.

Exit code 0 means every requested output file was written and parses back
cleanly; any failure returns nonzero with a diagnostic on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .config import SCHEMES, ConfigError, Scenario, apply_overrides, load_scenario_file
from .metrics import cdf_csv, compute_prr, prr_csv, records_csv, sweep_ranges
from .sim import Simulation

ENV_PREFIX = "V2XSIM_"


def _parse_seeds(text: str) -> list[int]:
    if ".." in text:
        lo, _, hi = text.partition("..")
        a, b = int(lo), int(hi)
        if b < a:
            raise ConfigError(f"bad seed range '{text}'")
        return list(range(a, b + 1))
    return [int(text)]


def _parse_sweep(text: str) -> list[float]:
    key, _, spec = text.partition("=")
    if key.strip() != "range":
        raise ConfigError("only 'range' sweeps are supported (--sweep range=lo:hi:step)")
    parts = spec.split(":")
    if len(parts) != 3:
        raise ConfigError("sweep spec must be lo:hi:step")
    lo, hi, step = (float(p) for p in parts)
    if step <= 0 or hi < lo:
        raise ConfigError("sweep needs lo <= hi and step > 0")
    out, v = [], lo
    while v <= hi + 1e-9:
        out.append(round(v, 6))
        v += step
    return out


def _env_overrides(environ) -> list[str]:
    out = []
    for key in sorted(environ):
        if key.startswith(ENV_PREFIX) and key != ENV_PREFIX.rstrip("_"):
            path = key[len(ENV_PREFIX):].lower().replace("__", ".")
            out.append(f"{path}={environ[key]}")
    return out


def _check_csv(path: Path) -> None:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
    if "," not in header:
        raise RuntimeError(f"{path} does not look like a CSV")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="v2xsim",
        description="Simulate vehicular message dissemination and write "
                    "records/cdf/prr CSVs.",
        epilog="Environment overrides: V2XSIM_<KEY> mirrors --set, with '__' "
               "standing for '.' (e.g. V2XSIM_MAC__SPS_ENABLED=false). "
               "--set beats the environment, which beats --config.")
    p.add_argument("--config", metavar="PATH", help="scenario file (JSON)")
    p.add_argument("--set", metavar="K=V", action="append", default=[],
                   dest="overrides", help="override one config key (repeatable)")
    p.add_argument("--seeds", metavar="A..B", default="1",
                   help="seed or inclusive seed range (default 1)")
    p.add_argument("--schemes", metavar="LIST", default=None,
                   help="comma-separated schemes to run, or 'all' "
                        "(default: the configured scheme)")
    p.add_argument("--sweep", metavar="K=lo:hi:step", default=None,
                   help="PRR-vs-range sweep; writes prr.csv only")
    p.add_argument("--out", metavar="DIR", default="results",
                   help="output directory (default results/)")
    p.add_argument("--validate", action="store_true",
                   help="echo the effective config and exit without running")
    p.add_argument("--trace", action="store_true",
                   help="also write per-seed allocation traces "
                        "(tti,carrier,rb,owner,purpose)")
    return p


def _resolve_scenario(args) -> Scenario:
    scn = load_scenario_file(args.config) if args.config else Scenario()
    env = _env_overrides(os.environ)
    if env:
        scn = apply_overrides(scn, env)
    if args.overrides:
        scn = apply_overrides(scn, args.overrides)
    return scn


def _schemes(args, scn: Scenario) -> list[str]:
    if args.schemes is None:
        return [scn.scheme]
    if args.schemes.strip() == "all":
        return list(SCHEMES)
    out = []
    for name in args.schemes.split(","):
        name = name.strip()
        if name not in SCHEMES:
            raise ConfigError(
                f"scheme must be one of {', '.join(SCHEMES)} (got '{name}')")
        out.append(name)
    return out


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scn = _resolve_scenario(args)
        seeds = _parse_seeds(args.seeds)
        schemes = _schemes(args, scn)

        if args.validate:
            report = {"ok": True, "schemes": schemes, "seeds": seeds,
                      "effective_config": scn.effective_config()}
            json.dump(report, sys.stdout, indent=2)
            print()
            return 0

        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        written: list[Path] = []

        manifest = {"config": args.config, "overrides": args.overrides,
                    "seeds": seeds, "schemes": schemes, "sweep": args.sweep,
                    "effective_config": scn.effective_config()}
        cfg_path = out / "effective_config.json"
        cfg_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

        if args.sweep:
            ranges = _parse_sweep(args.sweep)
            points = []
            for scheme in schemes:
                pts, _ = sweep_ranges(scn.replace(scheme=scheme), ranges, seeds)
                points.extend(pts)
            path = out / "prr.csv"
            path.write_text(prr_csv(points), encoding="utf-8")
            written.append(path)
        else:
            results, points = [], []
            for scheme in schemes:
                for seed in seeds:
                    sim = Simulation(scn.replace(scheme=scheme, seed=seed))
                    res = sim.run()
                    results.append(res)
                    p = compute_prr(res)[0]
                    p.seed = seed
                    points.append(p)
                    print(f"{scheme} seed={seed}: vehicles={res.diags['n_vehicles']} "
                          f"pairs={p.n} prr={p.prr:.4f}")
                    if args.trace:
                        tpath = out / f"trace_{scheme}_seed{seed}.csv"
                        with open(tpath, "w", encoding="utf-8") as fh:
                            fh.write("tti,carrier,rb,owner,purpose\n")
                            for row in sim.allocation_trace():
                                fh.write(",".join(str(c) for c in row) + "\n")
                        written.append(tpath)
            for name, text in (("records.csv", records_csv(results)),
                               ("cdf.csv", cdf_csv(results)),
                               ("prr.csv", prr_csv(points))):
                path = out / name
                path.write_text(text, encoding="utf-8")
                written.append(path)

        for path in written:
            _check_csv(path)
        return 0
    except (ConfigError, OSError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
