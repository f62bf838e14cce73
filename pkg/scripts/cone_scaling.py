"""Cone volume against r^n * C(n, delta): closed forms for n <= 3, Monte Carlo above."""
import argparse
import math

import numpy as np

from bldkit.mapping import ConeSpec, cone_measure_estimate


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=200_000)
    ap.add_argument("--delta", type=float, default=0.6)
    args = ap.parse_args()
    for n in (2, 3, 4, 5):
        unit, _ = cone_measure_estimate(ConeSpec(np.eye(n)[0], 1.0, args.delta), args.samples, seed=0)
        for r in (0.5, 2.0):
            value, se = cone_measure_estimate(ConeSpec(np.eye(n)[0], r, args.delta), args.samples, seed=1)
            dev = (value - unit * r**n) / max(se, 1e-300) if se else 0.0
            print(f"n={n} r={r:<4g} measure={value:.6g} r^n*C={unit * r**n:.6g} "
                  f"stderr={se:.2e} ({dev:+.2f} se)" + ("" if se else " exact"))
    print(f"half-angle {args.delta} rad = {math.degrees(args.delta):.1f} deg")


if __name__ == "__main__":
    main()
