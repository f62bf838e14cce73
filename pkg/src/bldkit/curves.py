"""Curves, inscribed-polyline lengths and length distortion ratios.

A curve is evaluated through ``at(u)`` for ``u`` in ``[0, n_pieces]``; piece
``i`` covers ``[i, i + 1]``. Polylines have one piece per edge so that their
vertices are always sample points, which matters once the curve is pushed
through a map: the image of a straight edge is generally not straight.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateCurveError, DomainError, PreconditionError

EPS = 1e-15
MAX_SAMPLES = 2**20
# relative slack for floating-point roundoff in certified ratio intervals
ROUNDOFF = 1e-12


@dataclass(frozen=True, eq=False)
class Polyline:
    vertices: np.ndarray

    kind = "polyline"

    def __post_init__(self):
        v = np.atleast_2d(np.asarray(self.vertices, float))
        if len(v) < 2:
            raise PreconditionError("a polyline needs at least two vertices")
        if np.any(np.linalg.norm(np.diff(v, axis=0), axis=1) == 0):
            raise PreconditionError("consecutive polyline vertices must be distinct")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self):
        return self.vertices.shape[1]

    @property
    def n_pieces(self):
        return len(self.vertices) - 1

    def at(self, u):
        u = np.asarray(u, float)
        k = np.clip(np.floor(u).astype(int), 0, self.n_pieces - 1)
        s = (u - k)[..., None]
        return self.vertices[k] * (1 - s) + self.vertices[k + 1] * s

    def parameter(self, u):
        return float(u)

    def split(self, index):
        """Two polylines sharing interior vertex ``index``."""
        if not 0 < index < len(self.vertices) - 1:
            raise PreconditionError("split index must be an interior vertex")
        return Polyline(self.vertices[: index + 1]), Polyline(self.vertices[index:])


@dataclass(frozen=True, eq=False)
class Parametric:
    """Curve ``func: [0, 1] -> R^n`` (vectorised over its argument)."""

    func: Callable
    initial_samples: int = 16

    kind = "parametric"
    n_pieces = 1

    @property
    def dim(self):
        return np.atleast_1d(self.func(np.array([0.0])))[0].shape[-1]

    def at(self, u):
        u = np.asarray(u, float)
        return np.asarray(self.func(u), float).reshape(u.shape + (-1,))

    def parameter(self, u):
        return float(u)


@dataclass(frozen=True, eq=False)
class Segment:
    """gamma(t) = base + t * direction on [0, length]."""

    base: np.ndarray
    direction: np.ndarray
    length: float

    kind = "segment"
    n_pieces = 1

    def __post_init__(self):
        base = np.asarray(self.base, float)
        v = np.asarray(self.direction, float)
        if abs(np.linalg.norm(v) - 1.0) > 1e-12:
            raise PreconditionError("segment direction must be a unit vector")
        if not self.length > 0:
            raise PreconditionError("segment length must be positive")
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "direction", v)
        object.__setattr__(self, "length", float(self.length))

    @classmethod
    def between(cls, p, q):
        p, q = np.asarray(p, float), np.asarray(q, float)
        d = np.linalg.norm(q - p)
        return cls(p, (q - p) / d, d)

    @property
    def dim(self):
        return len(self.base)

    @property
    def end(self):
        return self.base + self.length * self.direction

    def at(self, u):
        t = np.asarray(u, float)[..., None] * self.length
        return self.base + t * self.direction

    def parameter(self, u):
        return float(u) * self.length


@dataclass(frozen=True)
class LengthResult:
    value: float
    refinement_levels: int
    converged: bool
    estimated_error: float
    samples: int = 0


@dataclass(frozen=True)
class Distortion:
    length: LengthResult
    image: LengthResult
    ratio: float
    lower: float
    upper: float

    def outside(self, M):
        """Certified violation of [1/M, M]: the whole ratio interval lies outside."""
        return self.upper < 1.0 / M or self.lower > M


def _polyline_length(points):
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def curve_length(c, tol=1e-6, max_samples=MAX_SAMPLES) -> LengthResult:
    """Length of a curve; exact for polylines and segments.

    Parametric curves use uniform dyadic refinement of inscribed polylines,
    stopping once the relative increase between two levels drops below
    ``tol``. The error estimate is that last increase.
    """
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    if isinstance(c, Segment):
        return LengthResult(c.length, 0, True, 0.0, 2)
    if isinstance(c, Polyline):
        return LengthResult(_polyline_length(c.vertices), 0, True, 0.0, len(c.vertices))
    n = max(int(c.initial_samples), 1)
    prev = _polyline_length(c.at(np.linspace(0.0, 1.0, n + 1)))
    levels = 0
    while 2 * n <= max_samples:
        n *= 2
        levels += 1
        value = _polyline_length(c.at(np.linspace(0.0, 1.0, n + 1)))
        increase = abs(value - prev)
        prev = value
        if increase < tol * max(value, EPS):
            return LengthResult(value, levels, True, increase, n + 1)
    return LengthResult(prev, levels, False, increase if levels else float("inf"), n + 1)


def _check_vertices(domain, c):
    pts = c.vertices if isinstance(c, Polyline) else np.stack([c.base, c.end])
    inside = domain.contains(pts)
    if not np.all(inside):
        u = float(np.argmin(inside))
        raise DomainError(f"curve leaves the domain at parameter {c.parameter(u):g}", c.parameter(u))


def _composite(f, c):
    checked = isinstance(c, (Polyline, Segment))
    if checked:
        _check_vertices(f.domain, c)

    def image(u):
        pts = c.at(u)
        if not checked:
            inside = f.domain.contains(pts)
            if not np.all(inside):
                first = float(np.min(np.asarray(u)[~inside]))
                raise DomainError(f"curve leaves the domain at parameter {first:g}", c.parameter(first))
        return f(pts)

    return image


def _turn_defect(d_in, d_out):
    """1 - cos of the turning angle between consecutive chords (0 for null chords)."""
    n_in = np.linalg.norm(d_in, axis=-1)
    n_out = np.linalg.norm(d_out, axis=-1)
    denom = n_in * n_out
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("ij,ij->i", d_in, d_out) / denom
    return np.where(denom > 0, 1.0 - np.clip(cos, -1.0, 1.0), 0.0)


def adaptive_length(F, n_pieces, initial, tol, max_samples=MAX_SAMPLES) -> LengthResult:
    """Inscribed length of ``F`` on ``[0, n_pieces]`` by local bisection.

    Each interval carries its midpoint. Two indicators drive refinement:

    * the gain of an interval, i.e. how much the inscribed length grows
      when its midpoint is used (the level-to-level increase);
    * the turn at each shared endpoint, ``2 * h * (1 - cos angle)`` with
      ``h`` the longer adjacent half-chord. A kink of the image lying just
      beside a sample point hides from the midpoint gain (second order in
      its offset) but shows up as a turn, and its missing length is bounded
      by this term. The two end intervals have no neighbour, so they are
      charged the worst case, twice their outer half-chord.

    Intervals whose indicator exceeds their share of ``tol * length`` are
    bisected until the indicators sum to less than ``tol * length``; that
    sum is the reported error estimate.
    """
    u = np.linspace(0.0, n_pieces, n_pieces * initial + 1)
    Fu = F(u)
    a, b, Fa, Fb = u[:-1], u[1:], Fu[:-1], Fu[1:]
    m = 0.5 * (a + b)
    Fm = F(m)
    samples = len(u) + len(m)
    levels = 0
    while True:
        c1 = np.linalg.norm(Fm - Fa, axis=-1)
        c2 = np.linalg.norm(Fb - Fm, axis=-1)
        gain = np.maximum(c1 + c2 - np.linalg.norm(Fb - Fa, axis=-1), 0.0)
        turn = 2 * np.maximum(c2[:-1], c1[1:]) * _turn_defect(Fb[:-1] - Fm[:-1], Fm[1:] - Fa[1:])
        ends = 2 * np.array([c1[0], c2[-1]])
        total = float(np.sum(c1 + c2))
        excess = float(np.sum(gain) + np.sum(turn) + np.sum(ends))
        if excess == 0.0 or excess < tol * max(total, EPS):
            return LengthResult(total, levels, True, excess, samples)
        share = 0.5 * tol * total / len(a)
        split = gain > share
        hot = turn > share
        split[:-1] |= hot
        split[1:] |= hot
        split[0] |= ends[0] > share
        split[-1] |= ends[1] > share
        n_split = int(np.count_nonzero(split))
        if samples + 2 * n_split > max_samples:
            return LengthResult(total, levels, False, excess, samples)
        keep = ~split
        sa, sm, sb = a[split], m[split], b[split]
        sFa, sFm, sFb = Fa[split], Fm[split], Fb[split]
        mids = np.concatenate([0.5 * (sa + sm), 0.5 * (sm + sb)])
        Fmids = F(mids)
        a = np.concatenate([a[keep], sa, sm])
        b = np.concatenate([b[keep], sm, sb])
        m = np.concatenate([m[keep], mids])
        Fa = np.concatenate([Fa[keep], sFa, sFm])
        Fb = np.concatenate([Fb[keep], sFm, sFb])
        Fm = np.concatenate([Fm[keep], Fmids])
        # keep intervals in parameter order so neighbours share endpoints
        order = np.argsort(a, kind="stable")
        a, b, m, Fa, Fb, Fm = a[order], b[order], m[order], Fa[order], Fb[order], Fm[order]
        samples += 2 * n_split
        levels += 1


def image_length(f, c, tol=1e-6, max_samples=MAX_SAMPLES) -> LengthResult:
    """Length of ``f o c`` by adaptive inscribed polylines."""
    if tol <= 0:
        raise PreconditionError("tolerance must be positive")
    if c.dim != f.dim:
        raise PreconditionError("curve and mapping dimensions differ")
    initial = getattr(c, "initial_samples", 4 if isinstance(c, Polyline) else 16)
    return adaptive_length(_composite(f, c), c.n_pieces, initial, tol, max_samples)


def distortion(f, c, tol=1e-6, max_samples=MAX_SAMPLES) -> Distortion:
    """Distortion ratio of one curve together with a certified interval.

    Inscribed lengths are lower bounds, so each length lies in
    ``[value, value + estimated_error]``; the interval widens that by a
    roundoff margin.
    """
    length = curve_length(c, tol, max_samples)
    if length.value <= EPS:
        raise DegenerateCurveError("curve has zero length")
    image = image_length(f, c, tol, max_samples)
    ratio = image.value / length.value
    lower = image.value / (length.value + length.estimated_error) * (1 - ROUNDOFF)
    upper = (image.value + image.estimated_error) / length.value * (1 + ROUNDOFF)
    return Distortion(length, image, ratio, lower, upper)


def distortion_ratio(f, c, tol=1e-6) -> float:
    return distortion(f, c, tol).ratio
