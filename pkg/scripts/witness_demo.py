"""Build a lower-bound witness for (x, y) -> (x^3, y) and print every constant.

The map contracts horizontal directions near the y axis, so for any M > 1
there are short horizontal segments whose image is shorter than 1/M times
their length. Pass --svg to draw the segment, its cone and its image.
"""
import argparse

from bldkit.checks import GridConfig
from bldkit.gallery import gallery_entry
from bldkit.svg import certificate_payload, emit_svg
from bldkit.witness import WitnessConfig, construct_witness


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--M", type=float, nargs="+", default=[1.2, 1.5, 2.0, 4.0])
    ap.add_argument("--grid", type=int, default=40)
    ap.add_argument("--svg", help="plot for the last M")
    args = ap.parse_args()
    f = gallery_entry("cube_x").mapping
    cert = None
    for M in args.M:
        cert = construct_witness(f, WitnessConfig(M=M, grid=GridConfig(args.grid)))
        if cert is None:
            print(f"M={M:g}: no witness needed")
            continue
        print(f"M={M:g}: x={tuple(round(c, 4) for c in cert.x)} alpha={cert.alpha:.3g} "
              f"delta={cert.delta:.4g} tau={cert.tau:.3g} R={cert.R:.3g} "
              f"ratio={cert.ratio:.4g} (< {1 / M:.4g}: {cert.verified})")
    if args.svg and cert is not None:
        emit_svg(certificate_payload(f, cert), args.svg)


if __name__ == "__main__":
    main()
