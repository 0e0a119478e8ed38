#!/usr/bin/env python3
"""Run every bundled scenario config and collect the outputs under out/.

Usage: python scripts/run_all_scenarios.py [outdir]
"""
import json
import pathlib
import sys
import time

from photonloc.cli import run

HERE = pathlib.Path(__file__).resolve().parent
CONFIGS = HERE / "configs"


def main() -> int:
    outroot = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path("out")
    for scenario in ("density", "count", "boost", "costheta", "tail", "validate"):
        cfg = CONFIGS / f"{scenario}.toml"
        outdir = outroot / scenario
        t0 = time.monotonic()
        summary = run(scenario, str(cfg), str(outdir))
        dt = time.monotonic() - t0
        print(f"== {scenario} ({dt:.1f}s) -> {outdir}")
        print(json.dumps(summary, indent=2, sort_keys=True)[:600])
    return 0


if __name__ == "__main__":
    sys.exit(main())
