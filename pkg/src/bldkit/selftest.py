"""Cross-check every gallery entry against its ground truth."""
from __future__ import annotations

from dataclasses import dataclass

from .checks import CurveFamily, GridConfig, check_analytic, check_geometric
from .degree import DegreeConfig, classify_sense, degree
from .errors import BLDError, WitnessStageError
from .gallery import gallery
from .witness import WitnessConfig, construct_witness


@dataclass(frozen=True)
class SelftestConfig:
    seed: int = 0
    grid: int = 40
    grid_3d: int = 12
    tol: float = 1e-6
    pairs: int = 12
    curves: int = 30
    witness_grid: int = 40
    witness_grid_3d: int = 16


def _families(cfg):
    c = cfg.curves
    return (CurveFamily("axis_segments", 16, seed=cfg.seed),
            CurveFamily("random_segments", c, seed=cfg.seed),
            CurveFamily("random_polylines", c, seed=cfg.seed),
            CurveFamily("circles", max(c // 4, 2), seed=cfg.seed))


def check_entry(entry, cfg: SelftestConfig = SelftestConfig()):
    """Verdicts for one entry, each paired with whether it matches ground truth."""
    f, gt = entry.mapping, entry.ground_truth
    M = gt.test_M
    res = 2 if f.dim == 2 else 3
    grid = GridConfig(cfg.grid if f.dim == 2 else cfg.grid_3d, seed=cfg.seed)
    ana = check_analytic(f, grid, M)
    geo = check_geometric(f, _families(cfg), M, cfg.tol)
    combined = geo.passed and ana.negative_det_fraction == 0
    sense = classify_sense(f, DegreeConfig(pairs=cfg.pairs, seed=cfg.seed))
    degrees = []
    for s in gt.degree_at_samples:
        try:
            got = degree(f, s.region, s.target, DegreeConfig(seed=cfg.seed)).degree
        except BLDError as err:
            got = f"error: {err}"
        degrees.append({"target": list(s.target), "expected": s.degree, "got": got, "ok": got == s.degree})
    wgrid = GridConfig(cfg.witness_grid if res == 2 else cfg.witness_grid_3d)
    try:
        cert = construct_witness(f, WitnessConfig(M=M, grid=wgrid, seed=cfg.seed, tol=cfg.tol))
        witness = {"outcome": "absent" if cert is None else ("verified" if cert.verified else "unverified"),
                   "ratio": None if cert is None else cert.ratio}
    except WitnessStageError as err:
        witness = {"outcome": f"stage-failure:{err.stage}", "ratio": None}
    checks = {
        "analytic": {"passed": ana.passed, "best_M": ana.best_M_analytic,
                     "negative_det_fraction": ana.negative_det_fraction, "ok": ana.passed == gt.is_bld},
        "geometric": {"passed": geo.passed, "best_M": geo.best_M_geometric, "ok": combined == gt.is_bld},
        "equivalence": {"ok": ana.passed == combined},
        "sense": {"verdict": sense.verdict, "expected": gt.sense, "ok": sense.verdict == gt.sense},
        "degree": {"samples": degrees, "ok": all(d["ok"] for d in degrees)},
        "witness": {**witness, "expected": gt.witness_expected,
                    "ok": (witness["outcome"] == "verified") == gt.witness_expected},
    }
    return {"name": entry.name, "M": M, "checks": checks, "ok": all(c["ok"] for c in checks.values())}


def run_selftest(cfg: SelftestConfig = SelftestConfig()):
    entries = [check_entry(e, cfg) for e in gallery()]
    return {"entries": entries, "failures": [e["name"] for e in entries if not e["ok"]],
            "passed": all(e["ok"] for e in entries)}
