"""Analytic (pointwise Jacobian) and geometric (curve length) distortion checks."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._parallel import chunks, pmap
from .curves import Parametric, Polyline, Segment, distortion
from .errors import ConfigurationError, InconclusiveError, PreconditionError
from .mapping import MappingSpec, Region, jacobian_batch

OK, UNRELIABLE, EXCLUDED = 0, 1, 2
ZERO_DET = 1e-12
CHUNK = 4096


@dataclass(frozen=True)
class GridConfig:
    """Sampling grid. ``margin`` and ``fd_step`` default to multiples of the domain diameter."""

    resolution: int = 50
    margin: Optional[float] = None
    fd_step: Optional[float] = None
    seed: int = 0

    def resolve(self, region: Region):
        step = self.fd_step if self.fd_step is not None else 1e-5 * region.diameter
        margin = self.margin if self.margin is not None else max(2 * step, 1e-3 * region.diameter)
        if self.resolution < 2:
            raise PreconditionError("grid resolution must be >= 2")
        if not margin > step > 0:
            raise PreconditionError("grid needs margin > fd_step > 0")
        return step, margin


@dataclass(frozen=True, eq=False)
class SampleTable:
    """Per-point Jacobian statistics; ``status`` is OK, UNRELIABLE or EXCLUDED."""

    points: np.ndarray
    sigma_min: np.ndarray
    sigma_max: np.ndarray
    det: np.ndarray
    status: np.ndarray


def sample_jacobians(f: MappingSpec, grid: GridConfig, region: Optional[Region] = None) -> SampleTable:
    """Jacobian sweep over a grid; samples whose stencil touches a declared locus are excluded."""
    region = region or f.domain
    step, margin = grid.resolve(region)
    pts = region.grid(grid.resolution, margin)
    if not np.all(f.domain.contains(pts, step)):
        raise PreconditionError("grid does not fit inside the mapping domain")

    def work(bounds):
        lo, hi = bounds
        p = pts[lo:hi]
        excluded = f.near_locus(p, 2 * step)
        jac, reliable = jacobian_batch(f, p, step)
        sv = np.linalg.svd(jac, compute_uv=False)
        status = np.where(excluded, EXCLUDED, np.where(reliable, OK, UNRELIABLE))
        return sv[:, -1], sv[:, 0], np.linalg.det(jac), status

    parts = pmap(work, chunks(len(pts), CHUNK))
    smin, smax, det, status = (np.concatenate(col) for col in zip(*parts))
    return SampleTable(pts, smin, smax, det, status)


@dataclass(frozen=True)
class AnalyticReport:
    M_target: Optional[float]
    sample_count: int
    excluded_count: int
    min_sigma_min: float
    max_sigma_max: float
    negative_det_fraction: float
    zero_det_fraction: float
    unreliable_fraction: float
    best_M_analytic: float
    violation_count: int
    violations: tuple
    passed: Optional[bool]


def check_analytic(f: MappingSpec, grid: GridConfig = GridConfig(), M=None, rtol=1e-7,
                   max_violations=100, table: Optional[SampleTable] = None) -> AnalyticReport:
    """Pointwise two-sided derivative bound plus Jacobian sign over a grid.

    A sample violates at constant ``M`` when ``sigma_max > M``,
    ``sigma_min < 1/M`` (both up to ``rtol``) or ``det < 0``. Fractions are
    taken over all grid samples; excluded and unreliable samples carry no
    verdict.
    """
    if M is not None and M < 1:
        raise PreconditionError("M must be >= 1")
    t = table if table is not None else sample_jacobians(f, grid)
    ok = t.status == OK
    total = len(t.points)
    if not np.any(ok):
        raise InconclusiveError("every grid sample was excluded or unreliable")
    smin, smax, det = t.sigma_min[ok], t.sigma_max[ok], t.det[ok]
    min_s, max_s = float(smin.min()), float(smax.max())
    best = max(max_s, 1.0 / min_s) if min_s > 0 else float("inf")
    negative = det < -ZERO_DET
    zero = np.abs(det) <= ZERO_DET
    violations, count, passed = (), 0, None
    if M is not None:
        bad = (smax > M * (1 + rtol)) | (smin < (1 - rtol) / M) | negative
        count = int(np.count_nonzero(bad))
        pts = t.points[ok][bad]
        order = np.lexsort(pts.T[::-1])[:max_violations]
        violations = tuple(
            (tuple(float(c) for c in pts[i]), float(smin[bad][i]), float(smax[bad][i]), float(det[bad][i]))
            for i in order
        )
        passed = count == 0
    return AnalyticReport(
        M_target=None if M is None else float(M),
        sample_count=total,
        excluded_count=int(np.count_nonzero(t.status == EXCLUDED)),
        min_sigma_min=min_s,
        max_sigma_max=max_s,
        negative_det_fraction=int(np.count_nonzero(negative)) / total,
        zero_det_fraction=int(np.count_nonzero(zero)) / total,
        unreliable_fraction=int(np.count_nonzero(t.status == UNRELIABLE)) / total,
        best_M_analytic=float(best),
        violation_count=count,
        violations=violations,
        passed=passed,
    )


FAMILY_KINDS = ("axis_segments", "random_segments", "random_polylines", "circles", "concentric_circles")


@dataclass(frozen=True)
class CurveFamily:
    """Descriptor of a seeded family of test curves inside a region.

    ``count`` is the number of base points per axis cubed for
    ``axis_segments`` (so roughly ``count`` centres, one segment per axis),
    and the number of curves otherwise.
    """

    kind: str
    count: int = 100
    vertices: int = 5
    seed: int = 0
    length: Optional[float] = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ConfigurationError(f"unknown curve family {self.kind!r}")


def _circle(center, radius, e1, e2):
    center, e1, e2 = (np.asarray(a, float) for a in (center, e1, e2))

    def func(t):
        a = 2 * np.pi * np.asarray(t, float)[..., None]
        return center + radius * (np.cos(a) * e1 + np.sin(a) * e2)

    return Parametric(func, initial_samples=32)


def build_family(region: Region, family: CurveFamily):
    """Curves of one family, all inside ``region`` (which is convex)."""
    rng = np.random.default_rng(family.seed)
    n = region.dim
    margin = 1e-3 * region.diameter
    curves = []
    if family.kind == "axis_segments":
        length = family.length or 0.5 * region.inradius
        per_axis = max(2, int(round(family.count ** (1.0 / n))))
        inner = region.shrink(length / 2 + margin)
        for p in inner.grid(per_axis):
            for i in range(n):
                e = np.zeros(n)
                e[i] = 1.0
                curves.append(Segment(p - length / 2 * e, e, length))
    elif family.kind == "random_segments":
        ends = region.sample(rng, 2 * family.count, margin).reshape(family.count, 2, n)
        curves = [Segment.between(p, q) for p, q in ends if np.linalg.norm(q - p) > 1e-9]
    elif family.kind == "random_polylines":
        verts = region.sample(rng, family.count * family.vertices, margin)
        curves = [Polyline(v) for v in verts.reshape(family.count, family.vertices, n)]
    else:
        if n < 2:
            raise ConfigurationError("circles need n >= 2")
        centre = np.asarray(region.center)
        for k in range(family.count):
            if family.kind == "concentric_circles":
                c = centre
                r = region.inradius * (0.1 + 0.8 * (k + 0.5) / family.count)
                e1, e2 = np.eye(n)[0], np.eye(n)[1]
            else:
                c = region.sample(rng, 1, 2 * margin)[0]
                room = float(region.distance_to_boundary(c)) - margin
                r = room * rng.uniform(0.2, 1.0)
                q, _ = np.linalg.qr(rng.standard_normal((n, 2)))
                e1, e2 = q[:, 0], q[:, 1]
            curves.append(_circle(c, r, e1, e2))
    return [(family.kind, c) for c in curves]


def default_families(seed=0):
    return (CurveFamily("axis_segments", 49, seed=seed),
            CurveFamily("random_segments", 100, seed=seed),
            CurveFamily("random_polylines", 100, seed=seed),
            CurveFamily("circles", 20, seed=seed))


@dataclass(frozen=True)
class CurveRecord:
    index: int
    kind: str
    length: float
    image_length: float
    ratio: float
    lower: float
    upper: float
    converged: bool


@dataclass(frozen=True)
class GeometricReport:
    M_target: Optional[float]
    families: tuple
    curve_count: int
    min_ratio: float
    max_ratio: float
    best_M_geometric: float
    nonconverged_count: int
    violation_count: int
    violating_curves: tuple
    records: tuple = field(repr=False)
    passed: Optional[bool]


def check_geometric(f: MappingSpec, families=None, M=None, tol=1e-6, curves: Optional[Sequence] = None,
                    max_violations=100) -> GeometricReport:
    """Length distortion over curve families.

    A curve violates at ``M`` only when its certified ratio interval lies
    entirely outside ``[1/M, M]``.
    """
    if M is not None and M < 1:
        raise PreconditionError("M must be >= 1")
    if families is None and curves is None:
        families = default_families()
    if isinstance(families, CurveFamily):
        families = (families,)
    families = tuple(families or ())
    labelled = [lc for fam in families for lc in build_family(f.domain, fam)]
    labelled += [(getattr(c, "kind", "curve"), c) for c in (curves or ())]
    if not labelled:
        raise ConfigurationError("curve family is empty")

    def work(item):
        i, (kind, c) = item
        d = distortion(f, c, tol)
        return CurveRecord(i, kind, d.length.value, d.image.value, d.ratio, d.lower, d.upper,
                           d.length.converged and d.image.converged)

    records = tuple(pmap(work, enumerate(labelled)))
    ratios = np.array([r.ratio for r in records])
    with np.errstate(divide="ignore"):
        spread = np.maximum(ratios, 1.0 / ratios)
    bad = ()
    if M is not None:
        bad = tuple(r for r in records if r.upper < 1.0 / M or r.lower > M)
    return GeometricReport(
        M_target=None if M is None else float(M),
        families=tuple(fam.kind for fam in families) + (("explicit",) if curves else ()),
        curve_count=len(records),
        min_ratio=float(ratios.min()),
        max_ratio=float(ratios.max()),
        best_M_geometric=float(spread.max()),
        nonconverged_count=sum(not r.converged for r in records),
        violation_count=len(bad),
        violating_curves=bad[:max_violations],
        records=records,
        passed=None if M is None else not bad,
    )
