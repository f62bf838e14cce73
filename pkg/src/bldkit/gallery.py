"""Ground-truth mappings and the coefficient map-spec parser."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .mapping import LOCUS, SMOOTH, MappingSpec, Region

SENSE_PRESERVING = "sense-preserving"
WEAKLY = "weakly-sense-preserving"
NEITHER = "neither"
INCONCLUSIVE = "inconclusive"


def square(n=2, half=1.0):
    return Region("box", (0.0,) * n, (half,) * n)


def linear(A, name=None, domain=None):
    A = np.array(A, float)
    n = A.shape[0]
    domain = domain or square(n)

    def evaluate(x):
        return x @ A.T

    def jacobian(x):
        return np.broadcast_to(A, x.shape[:-1] + (n, n)).copy()

    label = name or "linear:" + ",".join(f"{a:g}" for a in A.ravel())
    return MappingSpec(label, domain, evaluate, jacobian, SMOOTH, params={"matrix": A.tolist()})


def diag(*entries, name=None, domain=None):
    name = name or "diag:" + ",".join(f"{e:g}" for e in entries)
    return linear(np.diag(entries), name=name, domain=domain)


def identity(n=2):
    return linear(np.eye(n), name="identity" if n == 2 else f"identity_{n}d")


def shear(c=0.5):
    return linear([[1.0, c], [0.0, 1.0]], name="shear")


def folding(half=1.0):
    """(x, y) -> (|x|, y): isometric on every curve, orientation flips across x = 0."""

    def evaluate(x):
        out = np.array(x, float, copy=True)
        out[..., 0] = np.abs(out[..., 0])
        return out

    def jacobian(x):
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = np.sign(x[..., 0])
        jac[..., 1, 1] = 1.0
        return jac

    return MappingSpec("folding", square(2, half), evaluate, jacobian, LOCUS,
                       locus_distance=lambda x: np.abs(x[..., 0]))


def _rot(phi):
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)


def _wind(xy, k):
    r = np.hypot(xy[..., 0], xy[..., 1])
    theta = np.arctan2(xy[..., 1], xy[..., 0])
    return np.stack([r * np.cos(k * theta), r * np.sin(k * theta)], axis=-1)


def _wind_jacobian(xy, k):
    theta = np.arctan2(xy[..., 1], xy[..., 0])
    scale = np.zeros(xy.shape[:-1] + (2, 2))
    scale[..., 0, 0] = 1.0
    scale[..., 1, 1] = k
    # Df = R(k theta) diag(1, k) R(-theta)
    return _rot(k * theta) @ scale @ _rot(-theta)


def winding(k=2, radius=1.0):
    """Polar winding (r, theta) -> (r, k theta) on a disk; branch point at 0."""
    return MappingSpec(
        f"winding_{k:g}", Region.ball((0.0, 0.0), radius),
        lambda x: _wind(x, k), lambda x: _wind_jacobian(x, k), LOCUS,
        locus_distance=lambda x: np.hypot(x[..., 0], x[..., 1]), params={"k": k},
    )


def cylinder_winding(k=2, radius=1.0):
    """(r, theta, z) -> (r, k theta, z) in R^3; branched along the z-axis."""

    def evaluate(x):
        return np.concatenate([_wind(x[..., :2], k), x[..., 2:]], axis=-1)

    def jacobian(x):
        jac = np.zeros(x.shape[:-1] + (3, 3))
        jac[..., :2, :2] = _wind_jacobian(x[..., :2], k)
        jac[..., 2, 2] = 1.0
        return jac

    return MappingSpec(f"cyl_winding_{k:g}", Region.ball((0.0, 0.0, 0.0), radius), evaluate, jacobian, LOCUS,
                       locus_distance=lambda x: np.hypot(x[..., 0], x[..., 1]), params={"k": k})


def cube_x():
    """(x, y) -> (x^3, y): a Lipschitz homeomorphism whose x-stretch vanishes at x = 0."""

    def evaluate(x):
        out = np.array(x, float, copy=True)
        out[..., 0] = out[..., 0] ** 3
        return out

    def jacobian(x):
        jac = np.zeros(x.shape[:-1] + (2, 2))
        jac[..., 0, 0] = 3 * x[..., 0] ** 2
        jac[..., 1, 1] = 1.0
        return jac

    return MappingSpec("cube_x", square(2), evaluate, jacobian, SMOOTH)


@dataclass(frozen=True)
class DegreeSample:
    region: Region
    target: tuple
    degree: int


@dataclass(frozen=True)
class GroundTruth:
    is_bld: bool
    best_M: Optional[float]
    sense: str
    degree_at_samples: tuple = ()
    # a lower-bound witness exists at the test constant (sigma_min < 1/M somewhere)
    witness_expected: bool = False

    def __post_init__(self):
        if self.is_bld and (self.best_M is None or self.sense != SENSE_PRESERVING):
            raise ValueError("a BLD ground truth needs best_M and a sense-preserving verdict")

    @property
    def test_M(self):
        return self.best_M if self.best_M is not None else 1.5


@dataclass(frozen=True, eq=False)
class GalleryEntry:
    name: str
    mapping: MappingSpec
    ground_truth: GroundTruth


def _linear_best_M(A):
    sv = np.linalg.svd(np.asarray(A, float), compute_uv=False)
    return float(max(sv[0], 1.0 / sv[-1]))


def _unit_disk(n=2, r=1.0):
    return Region.ball((0.0,) * n, r)


def gallery():
    """All ground-truth entries, in a fixed order."""
    lin = [[1.2, 0.4], [-0.3, 0.9]]
    c = 0.5
    shear_M = (c + np.sqrt(c * c + 4)) / 2
    sp = SENSE_PRESERVING
    return [
        GalleryEntry("identity", identity(), GroundTruth(
            True, 1.0, sp, (DegreeSample(_unit_disk(), (0.0, 0.0), 1),))),
        GalleryEntry("linear", linear(lin, name="linear"), GroundTruth(
            True, _linear_best_M(lin), sp, (DegreeSample(_unit_disk(), (0.2, 0.1), 1),))),
        GalleryEntry("stretch", diag(2.0, 0.5, name="stretch"), GroundTruth(
            True, 2.0, sp, (DegreeSample(_unit_disk(), (0.5, 0.2), 1),))),
        GalleryEntry("squeeze", diag(0.1, 1.0, name="squeeze"), GroundTruth(
            True, 10.0, sp, (DegreeSample(_unit_disk(), (0.02, 0.3), 1),))),
        GalleryEntry("shear", shear(c), GroundTruth(
            True, float(shear_M), sp, (DegreeSample(_unit_disk(), (0.3, 0.1), 1),))),
        GalleryEntry("folding", folding(), GroundTruth(
            False, None, NEITHER, (DegreeSample(_unit_disk(), (0.3, 0.0), 0),))),
        GalleryEntry("reflection", diag(1.0, -1.0, name="reflection"), GroundTruth(
            False, None, NEITHER, (DegreeSample(_unit_disk(), (0.0, 0.0), -1),))),
        GalleryEntry("winding_2", winding(2), GroundTruth(
            True, 2.0, sp, (DegreeSample(_unit_disk(r=0.9), (0.25, 0.0), 2),
                            DegreeSample(_unit_disk(r=0.9), (0.0, 0.0), 2)))),
        GalleryEntry("winding_3", winding(3), GroundTruth(
            True, 3.0, sp, (DegreeSample(_unit_disk(r=0.9), (0.25, 0.0), 3),))),
        GalleryEntry("cube_x", cube_x(), GroundTruth(
            False, None, sp, (DegreeSample(_unit_disk(), (0.125, 0.0), 1),), witness_expected=True)),
        GalleryEntry("identity_3d", identity(3), GroundTruth(
            True, 1.0, sp, (DegreeSample(_unit_disk(3), (0.1, 0.2, 0.3), 1),))),
        GalleryEntry("cyl_winding_2", cylinder_winding(2), GroundTruth(
            True, 2.0, sp, (DegreeSample(_unit_disk(3, 0.9), (0.25, 0.0, 0.1), 2),))),
    ]


def gallery_entry(name):
    for entry in gallery():
        if entry.name == name:
            return entry
    raise KeyError(name)


def parse_map(spec: str) -> MappingSpec:
    """Gallery name or coefficient spec: ``diag:a,b``, ``linear:a,b,c,d``, ``winding:k``."""
    spec = spec.strip()
    if ":" not in spec:
        try:
            return gallery_entry(spec).mapping
        except KeyError:
            raise ValueError(f"unknown map {spec!r}") from None
    kind, _, args = spec.partition(":")
    try:
        values = [float(a) for a in args.split(",") if a.strip()]
    except ValueError:
        raise ValueError(f"bad coefficients in map spec {spec!r}") from None
    if kind == "diag" and values:
        return diag(*values)
    if kind == "linear":
        n = int(round(np.sqrt(len(values))))
        if n * n != len(values) or n == 0:
            raise ValueError("linear map needs n*n coefficients")
        return linear(np.reshape(values, (n, n)))
    if kind == "winding" and len(values) == 1 and values[0] >= 1 and values[0] == int(values[0]):
        return winding(int(values[0]))
    raise ValueError(f"unknown map spec {spec!r}")
