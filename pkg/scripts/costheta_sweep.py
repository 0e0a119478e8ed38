#!/usr/bin/env python3
"""Sweep the wrong-basis ratio against the tilt angle of a counting-plane packet.

Writes costheta_sweep.csv with columns (theta_deg, ratio, cos_theta); by
construction the two trailing columns agree to the narrowband corrections.

Usage: python scripts/costheta_sweep.py [out.csv]
"""
import math
import sys

from photonloc.validation import costheta_case

ANGLES = [0.0, 10.0, 20.0, 30.0, 40.0, 45.0, 50.0, 55.0]


def main() -> int:
    path = sys.argv[1] if len(sys.argv) > 1 else "costheta_sweep.csv"
    with open(path, "w", encoding="ascii") as f:
        f.write("theta_deg,ratio,cos_theta\n")
        for theta in ANGLES:
            ratio = costheta_case(theta, size=64, om_hat=24.0, widths_hat=(0.6, 0.6, 0.24))
            cos = math.cos(math.radians(theta))
            f.write(f"{theta},{ratio:.10f},{cos:.10f}\n")
            print(f"theta={theta:5.1f}  ratio={ratio:.6f}  cos={cos:.6f}")
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
