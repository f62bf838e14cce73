"""Topological degree and sense-preservation classification.

In the plane the degree is the winding number of ``f`` along the boundary
of the subdomain. In higher dimensions it is the signed count of preimages
of a regular value, found by damped Newton iterations from a seed grid.
Classification samples finitely many (subdomain, target) pairs, so its
verdicts are evidence, not proofs.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import pmap
from .errors import BLDError, InconclusiveError, PreconditionError, TargetTooCloseError
from .gallery import INCONCLUSIVE, NEITHER, SENSE_PRESERVING, WEAKLY
from .mapping import MappingSpec, Region, jacobian_batch

WINDING = "winding-2d"
PREIMAGES = "signed-preimages"


@dataclass(frozen=True)
class DegreeConfig:
    boundary_samples: int = 64
    max_boundary_samples: int = 1 << 16
    min_margin: Optional[float] = None  # default 1e-4 * diam(D)
    method: str = "auto"
    seeds: int = 9
    newton_iters: int = 60
    regularity_tol: float = 1e-8
    resample_attempts: int = 5
    pairs: int = 20
    seed: int = 0
    fd_step: Optional[float] = None


@dataclass(frozen=True)
class DegreeResult:
    region: Region
    target: tuple
    degree: int
    method: str
    regularity_margin: float
    winding_sum: Optional[float] = None
    preimages: tuple = ()


@dataclass(frozen=True)
class SenseClassification:
    verdict: str
    evidence: tuple
    errors: int
    pairs: int
    note: str = "finite sample of subdomains and targets; evidence, not proof"


def _wrap(angle):
    return (angle + np.pi) % (2 * np.pi) - np.pi


def _winding(f, D, y, cfg, min_margin):
    u = np.linspace(0.0, 1.0, cfg.boundary_samples + 1)
    W = f(D.boundary_loop(u)) - y
    while True:
        dist = np.linalg.norm(W, axis=1)
        if dist.min() <= min_margin:
            raise TargetTooCloseError(f"target within {dist.min():.3g} of the boundary image")
        d = _wrap(np.diff(np.arctan2(W[:, 1], W[:, 0])))
        coarse = np.abs(d) >= np.pi / 2
        if not coarse.any():
            break
        if len(u) + coarse.sum() > cfg.max_boundary_samples:
            raise InconclusiveError("boundary refinement cap reached before angle increments fell below pi/2")
        mids = 0.5 * (u[:-1][coarse] + u[1:][coarse])
        u = np.concatenate([u, mids])
        order = np.argsort(u, kind="stable")
        u = u[order]
        W = np.concatenate([W, f(D.boundary_loop(mids)) - y])[order]
    total = float(d.sum()) / (2 * np.pi)
    deg = int(round(total))
    if abs(total - deg) > 0.1:
        raise InconclusiveError(f"winding sum {total:.3f} is not close to an integer")
    return deg, float(dist.min()), total


def _newton(f, D, y, cfg, step):
    X = np.vstack([D.grid(cfg.seeds), np.asarray(D.center)[None, :]])
    scale = 1.0 + np.linalg.norm(y)
    res = np.linalg.norm(f(X) - y, axis=1)
    for _ in range(cfg.newton_iters):
        active = res > 1e-12 * scale
        if not active.any():
            break
        Xa = X[active]
        jac, _ = jacobian_batch(f, Xa, step)
        dx = -np.einsum("kij,kj->ki", np.linalg.pinv(jac), f(Xa) - y)
        lam = np.ones(len(Xa))
        r0 = res[active]
        best, rbest = Xa.copy(), r0.copy()
        pending = np.ones(len(Xa), bool)
        for _ in range(30):
            trial = Xa[pending] + lam[pending, None] * dx[pending]
            rt = np.linalg.norm(f(trial) - y, axis=1)
            better = rt < r0[pending]
            idx = np.flatnonzero(pending)
            best[idx[better]] = trial[better]
            rbest[idx[better]] = rt[better]
            pending[idx[better]] = False
            lam[pending] *= 0.5
            if not pending.any():
                break
        X[active] = best
        res[active] = rbest
    found = X[(res <= 1e-9 * scale) & D.contains(X, -1e-9)]
    cluster = 1e-6 * D.diameter
    roots = []
    for p in found[np.lexsort(found.T[::-1])]:
        if all(np.linalg.norm(p - q) >= cluster for q in roots):
            roots.append(p)
    return np.array(roots).reshape(-1, D.dim), X, res


def _preimage_degree(f, D, y, cfg, step, min_margin, rng):
    bnd = D.boundary_points(max(cfg.boundary_samples // 4, 8))
    margin = float(np.linalg.norm(f(bnd) - y, axis=1).min())
    if margin <= min_margin:
        raise TargetTooCloseError(f"target within {margin:.3g} of the boundary image")
    target = np.asarray(y, float)
    for _ in range(cfg.resample_attempts + 1):
        roots, X, res = _newton(f, D, target, cfg, step)
        if len(roots) == 0:
            # y may simply lie outside f(D); decide using a Lipschitz estimate on the seed grid
            probe = D.grid(4 * cfg.seeds)
            jac, _ = jacobian_batch(f, probe, step)
            lip = float(np.linalg.norm(jac, ord=2, axis=(1, 2)).max())
            spacing = float(np.max((D.upper - D.lower) / (4 * cfg.seeds - 1)))
            gap = float(np.linalg.norm(f(probe) - target, axis=1).min())
            if gap > lip * spacing * np.sqrt(D.dim):
                return 0, margin, target, ()
            raise InconclusiveError("Newton found no preimage although the target looks covered")
        jac, _ = jacobian_batch(f, roots, step)
        dets = np.linalg.det(jac)
        # preimages on a declared non-smooth locus are not regular either
        singular = (np.abs(dets) < cfg.regularity_tol) | f.near_locus(roots, 2 * step)
        if not singular.any():
            pre = tuple((tuple(float(c) for c in p), int(np.sign(d))) for p, d in zip(roots, dets))
            return int(np.sign(dets).sum()), margin, target, pre
        offset = rng.standard_normal(D.dim)
        target = np.asarray(y, float) + 1e-3 * margin * offset / np.linalg.norm(offset)
    raise InconclusiveError("no regular value found near the target")


def degree(f: MappingSpec, D: Region, y, cfg: DegreeConfig = DegreeConfig()) -> DegreeResult:
    """deg(f, D, y) for a box or ball ``D`` inside the domain."""
    y = np.asarray(y, float)
    if D.dim != f.dim or y.shape != (f.dim,):
        raise PreconditionError("dimension mismatch between map, subdomain and target")
    if not np.all(f.domain.contains(D.boundary_points(8), -1e-12)):
        raise PreconditionError("subdomain must lie inside the mapping domain")
    min_margin = cfg.min_margin if cfg.min_margin is not None else 1e-4 * D.diameter
    method = cfg.method
    if method == "auto":
        method = WINDING if f.dim == 2 else PREIMAGES
    if method == WINDING:
        if f.dim != 2:
            raise PreconditionError("the winding method needs n = 2")
        deg, margin, total = _winding(f, D, y, cfg, min_margin)
        return DegreeResult(D, tuple(y.tolist()), deg, WINDING, margin, total)
    step = cfg.fd_step if cfg.fd_step is not None else f.default_step()
    rng = np.random.default_rng(cfg.seed)
    deg, margin, target, pre = _preimage_degree(f, D, y, cfg, step, min_margin, rng)
    return DegreeResult(D, tuple(target.tolist()), deg, PREIMAGES, margin, None, pre)


def sense_pairs(f: MappingSpec, cfg: DegreeConfig):
    """Seeded (subdomain, target) pairs: a centred probe, then random balls.

    Targets are images of points well inside their ball, so each target lies
    in f(D).
    """
    dom = f.domain
    rng = np.random.default_rng(cfg.seed)
    rho = dom.inradius
    c = np.asarray(dom.center)
    e1 = np.eye(f.dim)[0]
    pairs = [(Region.ball(c, 0.5 * rho), f(c + 0.25 * rho * e1))]
    while len(pairs) < cfg.pairs:
        centre = dom.sample(rng, 1, 0.1 * rho)[0]
        room = float(dom.distance_to_boundary(centre))
        D = Region.ball(centre, room * rng.uniform(0.1, 0.9))
        p = D.sample(rng, 1, 0.2 * D.extents[0])[0]
        pairs.append((D, f(p)))
    return pairs


def classify_sense(f: MappingSpec, cfg: DegreeConfig = DegreeConfig()) -> SenseClassification:
    pairs = sense_pairs(f, cfg)

    def work(item):
        i, (D, y) = item
        try:
            sub = DegreeConfig(**{**cfg.__dict__, "seed": cfg.seed + i})
            return degree(f, D, y, sub)
        except BLDError:
            return None

    results = pmap(work, enumerate(pairs))
    evidence = tuple(r for r in results if r is not None)
    errors = len(results) - len(evidence)
    degs = [r.degree for r in evidence]
    if not degs or errors > len(pairs) // 2:
        verdict = INCONCLUSIVE
    elif min(degs) < 0:
        verdict = NEITHER
    elif min(degs) > 0:
        verdict = SENSE_PRESERVING
    else:
        verdict = WEAKLY
    return SenseClassification(verdict, evidence, errors, len(pairs))
