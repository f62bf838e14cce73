"""Analytic vs geometric constants for every gallery map, as a table."""
import argparse

from bldkit.checks import GridConfig, check_analytic, check_geometric, default_families
from bldkit.gallery import gallery


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grid", type=int, default=60)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    print(f"{'map':16s} {'n':>2s} {'M analytic':>12s} {'M geometric':>12s} {'neg det':>8s} {'truth':>8s}")
    for e in gallery():
        f = e.mapping
        ana = check_analytic(f, GridConfig(args.grid if f.dim == 2 else args.grid // 4))
        geo = check_geometric(f, default_families(args.seed))
        truth = f"{e.ground_truth.best_M:.6g}" if e.ground_truth.is_bld else "not BLD"
        print(f"{e.name:16s} {f.dim:2d} {ana.best_M_analytic:12.6g} {geo.best_M_geometric:12.6g} "
              f"{ana.negative_det_fraction:8.3f} {truth:>8s}")


if __name__ == "__main__":
    main()
