"""Constructive witnesses for a failing lower length bound.

Given a point where some direction is contracted below ``1/M``, the search
builds a straight segment ``gamma(t) = x + t v`` on ``[0, R]`` whose image is
shorter than ``R / M``. Each stage mirrors one step of the contradiction
argument for the lower bound:

1. ``build_lusin_set``  cells where the Jacobian is numerically continuous;
2. ``find_candidate``   a member point ``x`` and direction ``h0`` with
   ``|Df(x) h0| = alpha < 1/M``;
3. ``select_constants`` ``alpha < beta < alpha1 < alpha2 < 1/M``;
4. ``find_delta``       a cone half-angle on which ``|Df(x) h| < beta``;
5. ``find_tau``         a radius on which member Jacobians keep ``< alpha1``;
6. ``find_R``           a cone radius where the set has near-full density;
7. ``find_direction``   a ray whose excursion outside the set is short.

Along the final ray the image speed is below ``alpha1`` on the set and at
most ``M`` off it, so the image is shorter than ``alpha2 * R < R / M``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._parallel import chunks, pmap
from .checks import GridConfig
from .curves import Segment, distortion
from .errors import (ContinuityError, DensityError, DirectionSearchError, EmptyLusinError,
                     PreconditionError)
from .mapping import MappingSpec, Region, cone_directions, cone_measure, ConeSpec, jacobian_at, jacobian_batch


@dataclass(frozen=True, eq=False)
class LusinSet:
    """Oscillation-thresholded cell grid standing in for a Lusin set.

    Cell centres sit at ``origin + index * cell_size``. A cell is a member
    when its Jacobian sample is reliable, it does not straddle a declared
    non-smooth locus, and its Jacobian differs from every face-adjacent
    candidate by at most ``1/m`` (max-entry difference times n).
    """

    m: int
    region: Region
    cell_size: float
    origin: np.ndarray
    membership: np.ndarray
    candidate: np.ndarray
    inside: np.ndarray
    jacobians: np.ndarray
    measure_fraction: float

    @property
    def dim(self):
        return self.region.dim

    @property
    def shape(self):
        return self.membership.shape

    def centers(self):
        idx = np.stack(np.meshgrid(*[np.arange(k) for k in self.shape], indexing="ij"), axis=-1)
        return self.origin + idx * self.cell_size

    def cell_of(self, points):
        """Cell indices of ``points`` and a mask of those that fall on the grid."""
        idx = np.rint((np.atleast_2d(points) - self.origin) / self.cell_size).astype(int)
        ok = np.all((idx >= 0) & (idx < np.array(self.shape)), axis=-1)
        return idx, ok

    def contains(self, points):
        idx, ok = self.cell_of(points)
        out = np.zeros(len(idx), bool)
        if ok.any():
            good = idx[ok]
            out[ok] = self.membership[tuple(good.T)]
        return out

    def member_centers(self):
        mask = self.membership
        return self.centers()[mask], self.jacobians[mask], np.argwhere(mask)


def _cell_layout(region, cell):
    half = region.half_widths
    counts = np.floor((half - cell / 2) / cell + 1e-9).astype(int)
    if np.any(counts < 0):
        raise PreconditionError("cell size exceeds the region")
    origin = np.asarray(region.center) - counts * cell
    return origin, tuple(2 * counts + 1)


def build_lusin_set(f: MappingSpec, region: Optional[Region] = None, m: int = 10,
                    grid: GridConfig = GridConfig(resolution=40), cell_size: Optional[float] = None) -> LusinSet:
    region = region or f.domain
    if m < 1:
        raise PreconditionError("Lusin index m must be >= 1")
    if not np.all(f.domain.contains(region.boundary_points(4), -1e-12)):
        raise PreconditionError("region must lie inside the mapping domain")
    n = region.dim
    cell = float(cell_size) if cell_size else 2 * region.inradius / grid.resolution
    step, _ = grid.resolve(region)
    if not cell / 2 > step:
        raise PreconditionError("cells must be wider than the finite-difference stencil")
    origin, shape = _cell_layout(region, cell)
    idx = np.stack(np.meshgrid(*[np.arange(k) for k in shape], indexing="ij"), axis=-1).reshape(-1, n)
    centers = origin + idx * cell
    half_diag = cell * math.sqrt(n) / 2
    inside = region.contains(centers, half_diag if region.kind == "ball" else 0.0)

    def work(bounds):
        lo, hi = bounds
        return jacobian_batch(f, centers[lo:hi], step)

    parts = pmap(work, chunks(len(centers), 4096))
    jac = np.concatenate([p[0] for p in parts]).reshape(shape + (n, n))
    reliable = np.concatenate([p[1] for p in parts]).reshape(shape)
    inside = inside.reshape(shape)
    candidate = inside & reliable & ~f.near_locus(centers, half_diag).reshape(shape)

    worst = np.zeros(shape)
    for axis in range(n):
        for shift in (1, -1):
            nb_jac = np.roll(jac, shift, axis=axis)
            nb_ok = np.roll(candidate, shift, axis=axis)
            # np.roll wraps; the wrapped slab has no real neighbour
            edge = [slice(None)] * n
            edge[axis] = 0 if shift == 1 else -1
            nb_ok[tuple(edge)] = False
            osc = n * np.abs(jac - nb_jac).max(axis=(-2, -1))
            worst = np.maximum(worst, np.where(nb_ok, osc, 0.0))
    membership = candidate & (worst <= 1.0 / m)
    total = int(np.count_nonzero(inside))
    members = int(np.count_nonzero(membership))
    if members == 0:
        raise EmptyLusinError(f"no member cells at m={m}, cell size {cell:g}; the map is too rough at this resolution",
                              {"cells": total})
    return LusinSet(m, region, cell, origin, membership, candidate, inside, jac, members / total)


def _canonical_sign(v):
    k = int(np.argmax(np.abs(v) > 1e-12))
    return v if v[k] >= 0 else -v


def candidates(f: MappingSpec, lusin: LusinSet, M: float, slack: float = 1e-6):
    """Member points with ``sigma_min < 1/M - slack``, best first.

    Order: cells whose 3^n neighbourhood is entirely member first, then
    smallest ``alpha``, then lexicographic point order.
    """
    pts, jac, idx = lusin.member_centers()
    if len(pts) == 0:
        return []
    _, sv, vt = np.linalg.svd(jac)
    alpha = sv[:, -1]
    good = alpha < 1.0 / M - slack
    if not good.any():
        return []
    n = lusin.dim
    full = np.ones(lusin.shape, bool)
    padded = np.pad(lusin.membership, 1, constant_values=False)
    for off in np.ndindex(*(3,) * n):
        sl = tuple(slice(o, o + s) for o, s in zip(off, lusin.shape))
        full &= padded[sl]
    dense = full[tuple(idx.T)]
    # quantise alpha so finite-difference noise does not override the point-order tie break
    key = np.round(alpha, 10)
    order = np.lexsort(tuple(pts[:, ::-1].T) + (key, ~dense))
    return [(pts[i], _canonical_sign(vt[i, -1]), float(alpha[i])) for i in order if good[i]]


def find_candidate(f: MappingSpec, lusin: LusinSet, M: float, slack: float = 1e-6):
    """``(x, h0, alpha)`` at the best qualifying member cell, or ``None``."""
    found = candidates(f, lusin, M, slack)
    return found[0] if found else None


def select_constants(alpha, M, rule=(0.25, 0.5, 0.75)):
    """Place beta, alpha1, alpha2 at fractions ``rule`` of the gap (alpha, 1/M)."""
    top = 1.0 / M
    if not alpha < top:
        raise PreconditionError(f"alpha={alpha:g} is not below 1/M={top:g}")
    if not 0 < rule[0] < rule[1] < rule[2] < 1:
        raise PreconditionError("constant rule fractions must increase strictly inside (0, 1)")
    beta, a1, a2 = (alpha + k * (top - alpha) for k in rule)
    if not alpha < beta < a1 < a2 < top:
        raise PreconditionError("constants collapsed in floating point; alpha is too close to 1/M")
    return beta, a1, a2


def _levels(delta):
    # angular spacing of about pi/256 in the polar direction
    return max(9, min(129, int(math.ceil(delta / (math.pi / 256))) + 1))


def find_delta(f: MappingSpec, x, h0, beta, delta_max=math.pi / 2, delta_min=math.pi / 4096, step=None):
    """Largest dyadic half-angle with ``|Df(x) h| < beta`` on the sampled cone."""
    jac = jacobian_at(f, x, step).matrix
    h0 = np.asarray(h0, float)
    lead = float(np.linalg.norm(jac @ h0))
    if not lead < beta:
        raise ContinuityError(f"|Df(x)h0| = {lead:g} is not below beta = {beta:g}", {"lead": lead, "beta": beta}, "find_delta")
    delta = delta_max
    best = None
    while delta >= delta_min:
        dirs = cone_directions(h0, delta, _levels(delta))
        peak = float(np.linalg.norm(dirs @ jac.T, axis=1).max())
        if peak < beta:
            return delta
        best = peak
        delta /= 2
    raise ContinuityError("no cone half-angle keeps |Df(x)h| below beta", {"last_peak": best, "beta": beta}, "find_delta")


def find_tau(f: MappingSpec, x, h0, delta, alpha1, lusin: LusinSet, tau_max=None, factor=0.5, tau_min=None):
    """Largest ladder radius whose member cells keep ``|Df(y) h| < alpha1`` on the cone."""
    x = np.asarray(x, float)
    top = float(lusin.region.distance_to_boundary(x))
    if tau_max is not None:
        top = min(top, tau_max)
    floor = tau_min if tau_min is not None else lusin.cell_size / 2
    pts, jac, _ = lusin.member_centers()
    dist = np.linalg.norm(pts - x, axis=1)
    near = dist <= top
    dirs = cone_directions(h0, delta, _levels(delta))
    peak = np.linalg.norm(np.einsum("kij,dj->kdi", jac[near], dirs), axis=-1).max(axis=1)
    dist = dist[near]
    tau = top
    while tau >= floor:
        inside = dist <= tau
        if not inside.any() or peak[inside].max() < alpha1:
            return tau
        tau *= factor
    raise ContinuityError("Jacobian leaves the alpha1 band at every ladder radius", {"alpha1": alpha1}, "find_tau")


def _cone_lattice(x, h0, delta, R, spacing):
    n = len(x)
    k = int(math.floor(R / spacing))
    axes = [np.arange(-k, k + 1) * spacing] * n
    offs = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, n)
    norms = np.linalg.norm(offs, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = offs @ h0 / norms
    keep = (norms <= R) & ((norms == 0) | (cos >= math.cos(delta) - 1e-15))
    return x + offs[keep]


def cone_fraction(lusin: LusinSet, x, h0, delta, R, lattice=4):
    """Member fraction of Cone(R, delta) at ``x``, counted on a lattice ``lattice`` times finer than the cells."""
    x = np.asarray(x, float)
    spacing = lusin.cell_size / lattice
    # cap the lattice at about two million points
    while (2 * R / spacing + 1) ** len(x) > 2e6:
        spacing *= 1.25
    pts = _cone_lattice(x, np.asarray(h0, float), delta, R, spacing)
    return float(np.count_nonzero(lusin.contains(pts))) / len(pts), len(pts)


def find_R(lusin: LusinSet, x, h0, delta, tau, alpha1, alpha2, M, factor=0.7, R_min=None, lattice=4):
    """Largest ladder radius at which the cone is denser than ``1 - ((alpha2 - alpha1)/M)^n``.

    Returns ``(R, fraction)``.
    """
    x = np.asarray(x, float)
    n = lusin.dim
    need = 1.0 - ((alpha2 - alpha1) / M) ** n
    R = min(tau, float(lusin.region.distance_to_boundary(x)))
    floor = R_min if R_min is not None else lusin.cell_size / 2
    last = None
    while R >= floor:
        frac, _ = cone_fraction(lusin, x, h0, delta, R, lattice)
        if frac > need:
            return R, frac
        last = frac
        R *= factor
    raise DensityError("cone density never exceeded the threshold; try the next candidate",
                       {"threshold": need, "last_fraction": last})


def ray_outside_measure(lusin: LusinSet, x, v, R, step=None):
    """Length of ``{t in [0, R] : x + t v not in the set}``, by midpoint counting."""
    step = step or lusin.cell_size / 4
    N = max(1, int(math.ceil(R / step)))
    t = (np.arange(N) + 0.5) * (R / N)
    pts = np.asarray(x, float) + t[:, None] * np.asarray(v, float)
    return float(np.count_nonzero(~lusin.contains(pts))) * R / N


def _cap_directions(h0, delta, count, rng):
    n = len(h0)
    if n == 1:
        return np.repeat(h0[None, :], count, axis=0)
    q, _ = np.linalg.qr(np.column_stack([h0, np.eye(n)]))
    comp = q[:, 1:n]
    phi = delta * rng.uniform(0.0, 1.0, count) ** (1.0 / (n - 1))
    g = rng.standard_normal((count, n - 1))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    d = np.cos(phi)[:, None] * h0 + np.sin(phi)[:, None] * (g @ comp.T)
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def find_direction(lusin: LusinSet, x, h0, delta, R, alpha1, alpha2, M, samples=64, seed=0):
    """First sampled cone direction whose ray spends less than ``R (alpha2 - alpha1) / M`` outside the set.

    The axis ``h0`` is tried first, then seeded random directions in the cap.
    Returns ``(v, outside_measure)``.
    """
    h0 = np.asarray(h0, float)
    bound = R * (alpha2 - alpha1) / M
    rng = np.random.default_rng(seed)
    dirs = np.vstack([h0[None, :], _cap_directions(h0, delta, max(samples - 1, 0), rng)])
    measures = pmap(lambda v: ray_outside_measure(lusin, x, v, R), dirs)
    for v, meas in zip(dirs, measures):
        if meas < bound:
            return v, meas
    best = min(measures)
    raise DirectionSearchError("no sampled direction met the outside-measure bound",
                               {"best_measure": best, "bound": bound})


@dataclass(frozen=True)
class WitnessConfig:
    M: float
    m: int = 10
    grid: GridConfig = GridConfig(resolution=40)
    region: Optional[Region] = None
    constant_rule: tuple = (0.25, 0.5, 0.75)
    delta_max: float = math.pi / 2
    delta_min: float = math.pi / 4096
    tau_max: Optional[float] = None
    tau_factor: float = 0.5
    tau_min: Optional[float] = None
    R_factor: float = 0.7
    R_min: Optional[float] = None
    lattice: int = 4
    direction_samples: int = 64
    max_candidates: int = 8
    slack: float = 1e-6
    tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        if not self.M >= 1:
            raise PreconditionError("M must be >= 1")
        if not (0 < self.delta_min <= self.delta_max and 0 < self.tau_factor < 1 and 0 < self.R_factor < 1):
            raise PreconditionError("search ladders need positive, ordered bounds and factors in (0, 1)")


@dataclass(frozen=True)
class WitnessCertificate:
    M: float
    m: int
    x: tuple
    h0: tuple
    alpha: float
    beta: float
    alpha1: float
    alpha2: float
    delta: float
    tau: float
    R: float
    v: tuple
    complement_ray_measure: float
    len_gamma: float
    len_image: float
    image_error: float
    ratio: float
    ratio_upper: float
    verified: bool
    lusin_measure_fraction: float
    cone_fraction: float
    cone_threshold: float
    cone_measure: float

    @property
    def curve(self):
        return Segment(np.array(self.x), np.array(self.v), self.R)

    @property
    def outside_bound(self):
        """Upper bound allowed for the outside-the-set length along the ray."""
        return self.R * (self.alpha2 - self.alpha1) / self.M


def construct_witness(f: MappingSpec, config: WitnessConfig) -> Optional[WitnessCertificate]:
    """Run the full pipeline; ``None`` when no point violates the lower bound.

    Density and direction failures move on to the next candidate; other
    stage failures propagate. A certificate whose numerical ratio is not
    certifiably below ``1/M`` is returned with ``verified=False``.
    """
    M = config.M
    region = config.region or f.domain
    lusin = build_lusin_set(f, region, config.m, config.grid)
    found = candidates(f, lusin, M, config.slack)
    if not found:
        return None
    step, _ = config.grid.resolve(region)
    failure = None
    for x, h0, alpha in found[: config.max_candidates]:
        beta, a1, a2 = select_constants(alpha, M, config.constant_rule)
        delta = find_delta(f, x, h0, beta, config.delta_max, config.delta_min, step)
        tau = find_tau(f, x, h0, delta, a1, lusin, config.tau_max, config.tau_factor, config.tau_min)
        try:
            R, frac = find_R(lusin, x, h0, delta, tau, a1, a2, M, config.R_factor, config.R_min, config.lattice)
            v, outside = find_direction(lusin, x, h0, delta, R, a1, a2, M, config.direction_samples, config.seed)
        except (DensityError, DirectionSearchError) as err:
            failure = err
            continue
        d = distortion(f, Segment(x, v, R), config.tol)
        return WitnessCertificate(
            M=float(M), m=config.m,
            x=tuple(map(float, x)), h0=tuple(map(float, h0)),
            alpha=alpha, beta=beta, alpha1=a1, alpha2=a2,
            delta=delta, tau=tau, R=R, v=tuple(map(float, v)),
            complement_ray_measure=outside,
            len_gamma=d.length.value, len_image=d.image.value, image_error=d.image.estimated_error,
            ratio=d.ratio, ratio_upper=d.upper, verified=bool(d.upper < 1.0 / M),
            lusin_measure_fraction=lusin.measure_fraction,
            cone_fraction=frac, cone_threshold=1.0 - ((a2 - a1) / M) ** lusin.dim,
            cone_measure=cone_measure(ConeSpec(tuple(h0), R, delta)),
        )
    raise failure
