"""Command-line entry point: ``bldkit <command> [options]``.

Exit codes: 0 when checks pass or there is nothing to report, 2 when a
violation or a verified witness is found, 1 on usage or runtime errors.
Reports go to stdout (or ``--json``); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import report, svg
from .checks import GridConfig, check_analytic, check_geometric, default_families, sample_jacobians
from .degree import DegreeConfig, classify_sense, degree
from .errors import BLDError, WitnessStageError
from .gallery import INCONCLUSIVE, NEITHER, gallery, parse_map
from .mapping import Region
from .selftest import SelftestConfig, run_selftest
from .witness import WitnessConfig, construct_witness

PASS, USAGE, VIOLATION = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 means "violation" here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(f"{self.prog}: error: {message}") from None


def _common(p, needs_map=True):
    if needs_map:
        p.add_argument("--map", required=True, help="gallery name or diag:a,b / linear:a,b,c,d / winding:k")
    p.add_argument("--M", type=float, help="distortion constant to test")
    p.add_argument("--grid", type=int, default=50, help="grid points per axis")
    p.add_argument("--tol", type=float, default=1e-6, help="relative length tolerance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--json", metavar="PATH", help="write the report envelope here instead of stdout")
    p.add_argument("--csv", metavar="PATH", help="per-sample or per-curve table")
    p.add_argument("--svg", metavar="PATH", help="plot of curves and images (n = 2 only)")


def build_parser():
    parser = _Parser(prog="bldkit", description="Numerical checks for bounded length distortion mappings.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _common(sub.add_parser("analyze", help="pointwise singular-value and Jacobian-sign check"))
    _common(sub.add_parser("geometric", help="length distortion over curve families"))
    p = sub.add_parser("degree", help="topological degree on a ball")
    _common(p)
    p.add_argument("--center", type=float, nargs="+")
    p.add_argument("--radius", type=float)
    p.add_argument("--target", type=float, nargs="+")
    p = sub.add_parser("sense", help="sense-preservation from sampled degrees")
    _common(p)
    p.add_argument("--pairs", type=int, default=20)
    p = sub.add_parser("witness", help="construct a segment violating the lower length bound")
    _common(p)
    p.add_argument("--m", type=int, default=10, help="Lusin index")
    _common(sub.add_parser("gallery", help="list gallery maps"), needs_map=False)
    _common(sub.add_parser("selftest", help="check every gallery map against its ground truth"), needs_map=False)
    return parser


def _emit(args, payload):
    env = report.ReportEnvelope(args.command, {k: v for k, v in vars(args).items() if k != "command"}, payload)
    text = env.to_json()
    if args.json:
        with open(args.json, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _note(msg):
    print(msg, file=sys.stderr)


def _analyze(args, f):
    grid = GridConfig(args.grid, seed=args.seed)
    table = sample_jacobians(f, grid)
    rep = check_analytic(f, grid, args.M, table=table)
    if args.csv:
        report.write_samples_csv(table, args.csv)
    if args.svg:
        _note("analyze has no curves to plot; --svg ignored")
    _note(f"best M (analytic) = {rep.best_M_analytic:.6g}, negative det fraction = {rep.negative_det_fraction:.4g}")
    return rep, VIOLATION if rep.passed is False else PASS


def _geometric(args, f):
    rep = check_geometric(f, default_families(args.seed), args.M, args.tol)
    if args.csv:
        report.write_curves_csv(rep, args.csv)
    if args.svg:
        from .checks import CurveFamily, build_family
        curves = [c for _, c in build_family(f.domain, CurveFamily("random_polylines", 12, seed=args.seed))]
        curves += [c for _, c in build_family(f.domain, CurveFamily("concentric_circles", 4))]
        svg.emit_svg(svg.curve_payload(f, curves, title=f"{f.name}: curves and images"), args.svg)
    _note(f"best M (geometric) = {rep.best_M_geometric:.6g} over {rep.curve_count} curves")
    return rep, VIOLATION if rep.passed is False else PASS


def _degree(args, f):
    dom = f.domain
    c = np.asarray(args.center if args.center is not None else dom.center, float)
    r = args.radius if args.radius is not None else 0.5 * dom.inradius
    y = np.asarray(args.target, float) if args.target is not None else f(c)
    res = degree(f, Region.ball(c, r), y, DegreeConfig(seed=args.seed))
    _note(f"deg = {res.degree} ({res.method})")
    return res, PASS


def _sense(args, f):
    res = classify_sense(f, DegreeConfig(pairs=args.pairs, seed=args.seed))
    _note(f"{res.verdict} ({len(res.evidence)} degrees, {res.errors} failed pairs)")
    if res.verdict == INCONCLUSIVE:
        return res, USAGE
    return res, VIOLATION if res.verdict == NEITHER else PASS


def _witness(args, f):
    if args.M is None:
        raise SystemExit("bldkit witness: --M is required")
    cfg = WitnessConfig(M=args.M, m=args.m, grid=GridConfig(args.grid), seed=args.seed, tol=args.tol)
    cert = construct_witness(f, cfg)
    if cert is None:
        _note("no point violates the lower bound; no witness needed")
        if args.svg:
            _note("nothing to plot")
        return {"witness": None, "reason": "no candidate below 1/M"}, PASS
    if args.svg:
        svg.emit_svg(svg.certificate_payload(f, cert, title=f"{f.name}: witness at M={args.M:g}"), args.svg)
    if not cert.verified:
        _note(f"construction finished but the ratio {cert.ratio:.6g} is not certified below 1/M")
        return cert, PASS
    _note(f"verified witness: ratio {cert.ratio:.6g} < 1/M = {1 / args.M:.6g}")
    return cert, VIOLATION


def _gallery(args):
    rows = []
    for e in gallery():
        gt = e.ground_truth
        rows.append({"name": e.name, "dim": e.mapping.dim, "is_bld": gt.is_bld, "best_M": gt.best_M,
                     "sense": gt.sense})
        _note(f"{e.name:16s} n={e.mapping.dim} bld={gt.is_bld!s:5s} M={gt.best_M} sense={gt.sense}")
    return {"entries": rows}, PASS


def _selftest(args):
    res = run_selftest(SelftestConfig(seed=args.seed, tol=args.tol))
    for e in res["entries"]:
        bad = [k for k, v in e["checks"].items() if not v["ok"]]
        _note(f"{e['name']:16s} {'ok' if e['ok'] else 'MISMATCH ' + ','.join(bad)}")
    return res, PASS if res["passed"] else VIOLATION


_RUN = {"analyze": _analyze, "geometric": _geometric, "degree": _degree, "sense": _sense, "witness": _witness}


def cli_run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code not in (0, None) and isinstance(exc.code, str):
            _note(exc.code)
        return PASS if exc.code in (0, None) else USAGE
    try:
        if args.M is not None and args.M < 1:
            raise ValueError("--M must be >= 1")
        if args.command == "gallery":
            payload, code = _gallery(args)
        elif args.command == "selftest":
            payload, code = _selftest(args)
        else:
            payload, code = _RUN[args.command](args, parse_map(args.map))
    except SystemExit as exc:
        _note(str(exc.code))
        return USAGE
    except WitnessStageError as err:
        _note(f"witness stage {err.stage} failed: {err}; diagnostics {err.diagnostics}; try a finer --grid")
        return USAGE
    except (BLDError, ValueError, OSError) as err:
        _note(f"bldkit {args.command}: {err}")
        return USAGE
    _emit(args, payload)
    return code


def main():
    sys.exit(cli_run())


if __name__ == "__main__":
    main()
