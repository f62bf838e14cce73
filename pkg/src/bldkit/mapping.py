"""Mappings, regions, Jacobian sampling and cone geometry.

Every mapping evaluates vectorised: ``evaluate`` receives an array whose last
axis has length n and returns an array of the same shape. Analytic Jacobians
follow the same convention and return ``(..., n, n)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import BoundaryMarginError, EvaluationError, PreconditionError

BOX = "box"
BALL = "ball"

SMOOTH = "smooth"
LOCUS = "locus"
UNKNOWN = "unknown"

# relative disagreement between FD steps h and h/2 that flags a sample
FD_DISAGREEMENT = 0.10


@dataclass(frozen=True)
class Region:
    """Axis-aligned box (``extents`` = half-widths) or closed ball (``extents`` = (radius,))."""

    kind: str
    center: tuple
    extents: tuple

    def __post_init__(self):
        center = tuple(float(c) for c in np.atleast_1d(self.center))
        extents = tuple(float(e) for e in np.atleast_1d(self.extents))
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "extents", extents)
        if self.kind not in (BOX, BALL):
            raise PreconditionError(f"unknown region kind {self.kind!r}")
        if len(center) < 1:
            raise PreconditionError("region dimension must be >= 1")
        if self.kind == BOX and len(extents) != len(center):
            raise PreconditionError("box needs one half-width per axis")
        if self.kind == BALL and len(extents) != 1:
            raise PreconditionError("ball needs exactly one radius")
        if not all(e > 0 and math.isfinite(e) for e in extents):
            raise PreconditionError("region extents must be strictly positive")

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, float)
        upper = np.asarray(upper, float)
        return cls(BOX, tuple((lower + upper) / 2), tuple((upper - lower) / 2))

    @classmethod
    def ball(cls, center, radius):
        return cls(BALL, tuple(np.atleast_1d(center)), (float(radius),))

    @property
    def dim(self):
        return len(self.center)

    @property
    def half_widths(self):
        """Half-widths of the bounding box."""
        if self.kind == BOX:
            return np.asarray(self.extents)
        return np.full(self.dim, self.extents[0])

    @property
    def lower(self):
        return np.asarray(self.center) - self.half_widths

    @property
    def upper(self):
        return np.asarray(self.center) + self.half_widths

    @property
    def diameter(self):
        return float(2 * np.linalg.norm(self.half_widths)) if self.kind == BOX else 2 * self.extents[0]

    @property
    def inradius(self):
        return float(min(self.half_widths))

    def distance_to_boundary(self, points):
        """Signed distance to the boundary, positive inside."""
        p = np.asarray(points, float) - np.asarray(self.center)
        if self.kind == BALL:
            return self.extents[0] - np.linalg.norm(p, axis=-1)
        return np.min(self.half_widths - np.abs(p), axis=-1)

    def contains(self, points, margin=0.0):
        return self.distance_to_boundary(points) >= margin

    def grid(self, resolution, margin=0.0):
        """Tensor grid of ``resolution`` points per axis, ``margin`` inside the boundary."""
        if resolution < 2:
            raise PreconditionError("grid resolution must be >= 2")
        axes = [np.linspace(lo + margin, hi - margin, resolution)
                for lo, hi in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=-1)
        if self.kind == BALL:
            pts = pts[self.contains(pts, margin)]
        return pts

    def shrink(self, amount):
        if self.kind == BALL:
            return Region.ball(self.center, self.extents[0] - amount)
        return Region(BOX, self.center, tuple(e - amount for e in self.extents))

    def sample(self, rng, count, margin=0.0):
        """Uniform random points at least ``margin`` inside the region."""
        inner = self.shrink(margin)
        n = self.dim
        if inner.kind == BOX:
            u = rng.uniform(-1.0, 1.0, size=(count, n))
            return np.asarray(inner.center) + u * inner.half_widths
        g = rng.standard_normal((count, n))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = inner.extents[0] * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / n)
        return np.asarray(inner.center) + g * r

    def boundary_loop(self, u):
        """Counter-clockwise parametrisation of a planar boundary, ``u`` in [0, 1]."""
        if self.dim != 2:
            raise PreconditionError("boundary_loop is only defined for n = 2")
        u = np.asarray(u, float)
        c = np.asarray(self.center)
        if self.kind == BALL:
            a = 2 * np.pi * u
            return c + self.extents[0] * np.stack([np.cos(a), np.sin(a)], axis=-1)
        lo, hi = self.lower, self.upper
        corners = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]], [lo[0], hi[1]], [lo[0], lo[1]]])
        s = np.clip(u, 0.0, 1.0) * 4
        k = np.minimum(np.floor(s).astype(int), 3)
        t = (s - k)[..., None]
        return corners[k] * (1 - t) + corners[k + 1] * t

    def boundary_points(self, per_axis):
        """Points spread over the boundary (any dimension), for margin checks."""
        n = self.dim
        c = np.asarray(self.center)
        if self.kind == BALL:
            # project the surface of the unit cube onto the sphere
            g = Region(BOX, (0.0,) * n, (1.0,) * n).boundary_points(per_axis)
            return c + self.extents[0] * g / np.linalg.norm(g, axis=1, keepdims=True)
        faces = []
        axes = [np.linspace(lo, hi, per_axis) for lo, hi in zip(self.lower, self.upper)]
        for i in range(n):
            for side in (self.lower[i], self.upper[i]):
                sub = axes[:i] + [np.array([side])] + axes[i + 1:]
                mesh = np.meshgrid(*sub, indexing="ij")
                faces.append(np.stack([m.ravel() for m in mesh], axis=-1))
        return np.concatenate(faces)


@dataclass(frozen=True, eq=False)
class MappingSpec:
    """An evaluable map of R^n on ``domain``.

    ``locus_distance`` (optional) returns the distance from each point to a
    declared set where the map is not differentiable, e.g. ``|x|`` for the
    fold line of the planar folding. ``smoothness`` is ``"smooth"``,
    ``"locus"`` (non-smooth on the declared locus) or ``"unknown"``.
    """

    name: str
    domain: Region
    evaluate: Callable
    jacobian: Optional[Callable] = None
    smoothness: str = SMOOTH
    locus_distance: Optional[Callable] = None
    params: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.domain.dim

    def __call__(self, x):
        return np.asarray(self.evaluate(np.asarray(x, float)), float)

    def near_locus(self, points, width):
        points = np.asarray(points, float)
        if self.locus_distance is None:
            return np.zeros(points.shape[:-1], bool)
        return np.asarray(self.locus_distance(points)) < width

    def default_step(self):
        return 1e-5 * self.domain.diameter


@dataclass(frozen=True, eq=False)
class JacobianSample:
    point: np.ndarray
    matrix: np.ndarray
    singular_values: np.ndarray
    determinant: float
    reliable: bool = True


def fd_jacobian(f, points, step):
    """Central-difference Jacobians at ``points`` (k, n) -> (k, n, n)."""
    pts = np.atleast_2d(np.asarray(points, float))
    k, n = pts.shape
    jac = np.empty((k, n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = step
        jac[:, :, i] = (f(pts + e) - f(pts - e)) / (2 * step)
    return jac


def jacobian_batch(f: MappingSpec, points, step):
    """Jacobians and reliability flags at many points.

    Analytic Jacobians are always reliable. Finite-difference samples are
    flagged unreliable when steps ``step`` and ``step/2`` disagree by more
    than 10% (max-entry norm), the signature of a nearby kink.
    """
    pts = np.atleast_2d(np.asarray(points, float))
    if f.jacobian is not None:
        jac = np.asarray(f.jacobian(pts), float).reshape(len(pts), f.dim, f.dim)
        reliable = np.ones(len(pts), bool)
    else:
        jac = fd_jacobian(f, pts, step)
        half = fd_jacobian(f, pts, step / 2)
        diff = np.abs(jac - half).max(axis=(1, 2))
        scale = np.maximum(np.abs(half).max(axis=(1, 2)), 1e-12)
        reliable = diff <= FD_DISAGREEMENT * scale
    if not np.all(np.isfinite(jac)):
        bad = pts[~np.isfinite(jac).all(axis=(1, 2))][0]
        raise EvaluationError(f"non-finite evaluation of {f.name} near {bad.tolist()}")
    return jac, reliable


def jacobian_at(f: MappingSpec, x, step=None) -> JacobianSample:
    x = np.asarray(x, float)
    step = f.default_step() if step is None else float(step)
    if step <= 0:
        raise PreconditionError("finite-difference step must be positive")
    if not f.domain.contains(x, margin=step):
        raise BoundaryMarginError(f"point {x.tolist()} is closer than {step:g} to the domain boundary")
    jac, reliable = jacobian_batch(f, x[None, :], step)
    return make_sample(x, jac[0], bool(reliable[0]))


def make_sample(x, matrix, reliable=True):
    sv = np.linalg.svd(matrix, compute_uv=False)
    return JacobianSample(np.asarray(x, float), matrix, sv, float(np.linalg.det(matrix)), reliable)


def singular_bounds(sample: JacobianSample):
    """(sigma_min, sigma_max) of a Jacobian sample."""
    sv = sample.singular_values
    return float(sv[-1]), float(sv[0])


@dataclass(frozen=True)
class ConeSpec:
    """Closed cone of vectors within ``half_angle`` of ``axis`` and norm <= ``radius``."""

    axis: tuple
    radius: float
    half_angle: float
    apex: Optional[tuple] = None

    def __post_init__(self):
        axis = np.asarray(self.axis, float)
        if abs(np.linalg.norm(axis) - 1.0) > 1e-12:
            raise PreconditionError("cone axis must be a unit vector")
        if not self.radius > 0:
            raise PreconditionError("cone radius must be positive")
        if not 0 < self.half_angle <= np.pi:
            raise PreconditionError("cone half-angle must lie in (0, pi]")
        object.__setattr__(self, "axis", tuple(axis.tolist()))
        apex = np.zeros(len(axis)) if self.apex is None else np.asarray(self.apex, float)
        object.__setattr__(self, "apex", tuple(apex.tolist()))

    @property
    def dim(self):
        return len(self.axis)

    def with_radius(self, radius):
        return ConeSpec(self.axis, radius, self.half_angle, self.apex)


def angle_to(axis, vectors):
    v = np.asarray(vectors, float)
    norms = np.linalg.norm(v, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = (v @ np.asarray(axis, float)) / norms
    return np.arccos(np.clip(np.nan_to_num(cos, nan=1.0), -1.0, 1.0))


def cone_contains(c: ConeSpec, h):
    """Closed membership test; the apex itself belongs to the cone."""
    d = np.asarray(h, float) - np.asarray(c.apex)
    norms = np.linalg.norm(d, axis=-1)
    inside = (norms <= c.radius) & (angle_to(c.axis, d) <= c.half_angle)
    inside = inside | (norms == 0)
    return bool(inside) if np.ndim(inside) == 0 else inside


def unit_ball_volume(n):
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def cone_measure_estimate(c: ConeSpec, samples=10**6, seed=0, chunk=1 << 16):
    """(measure, standard error) of a cone; exact with zero error for n <= 3.

    For n >= 4 points are drawn uniformly in the bounding cube, rejected
    outside the ball, and the in-cone fraction of ``samples`` accepted
    points is scaled by the ball volume.
    """
    n, r, delta = c.dim, c.radius, c.half_angle
    if n == 1:
        return (r if delta < np.pi else 2 * r), 0.0
    if n == 2:
        return delta * r**2, 0.0
    if n == 3:
        return 2 * np.pi / 3 * (1 - np.cos(delta)) * r**3, 0.0
    rng = np.random.default_rng(seed)
    axis = np.asarray(c.axis)
    accepted = hits = 0
    while accepted < samples:
        u = rng.uniform(-1.0, 1.0, size=(chunk, n))
        u = u[np.einsum("ij,ij->i", u, u) <= 1.0][: samples - accepted]
        accepted += len(u)
        hits += int(np.count_nonzero(angle_to(axis, u) <= delta))
    p = hits / accepted
    ball = unit_ball_volume(n) * r**n
    return ball * p, ball * math.sqrt(p * (1 - p) / accepted)


def cone_measure(c: ConeSpec, samples=10**6, seed=0):
    return cone_measure_estimate(c, samples, seed)[0]


def cone_directions(axis, half_angle, count, around=64):
    """Deterministic sample of unit vectors in the cone, rim included.

    The polar angle runs over ``count`` levels in [0, half_angle]; around the
    axis the sample uses ``around`` points of a circle (n = 3) or a fixed
    set of complement directions (n >= 4).
    """
    axis = np.asarray(axis, float)
    n = len(axis)
    phis = np.linspace(0.0, half_angle, max(count, 2))
    if n == 1:
        return axis[None, :]
    # orthonormal basis of the complement of the axis
    q, _ = np.linalg.qr(np.column_stack([axis, np.eye(n)]))
    comp = q[:, 1:n]
    if n == 2:
        ring = np.array([[1.0], [-1.0]])
    elif n == 3:
        psi = np.linspace(0.0, 2 * np.pi, around, endpoint=False)
        ring = np.stack([np.cos(psi), np.sin(psi)], axis=1)
    else:
        g = np.random.default_rng(12345).standard_normal((around, n - 1))
        ring = np.concatenate([np.eye(n - 1), -np.eye(n - 1), g / np.linalg.norm(g, axis=1, keepdims=True)])
    dirs = [axis[None, :]]
    for phi in phis[1:]:
        dirs.append(np.cos(phi) * axis + np.sin(phi) * (ring @ comp.T))
    out = np.vstack(dirs)
    return out / np.linalg.norm(out, axis=1, keepdims=True)
