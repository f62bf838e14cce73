import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import bldkit.gallery as g
from bldkit.curves import (Parametric, Polyline, Segment, adaptive_length, curve_length, distortion,
                           distortion_ratio, image_length)
from bldkit.errors import DegenerateCurveError, DomainError, PreconditionError


def folded_length(vertices):
    """Exact length of a polyline's image under (x, y) -> (|x|, y).

    Each edge crossing x = 0 is split at the crossing; folding is then
    affine on every sub-edge.
    """
    total = 0.0
    for p, q in zip(vertices[:-1], vertices[1:]):
        pts = [p, q]
        if p[0] * q[0] < 0:
            t = p[0] / (p[0] - q[0])
            pts = [p, p + t * (q - p), q]
        for a, b in zip(pts[:-1], pts[1:]):
            a, b = np.array([abs(a[0]), a[1]]), np.array([abs(b[0]), b[1]])
            total += np.linalg.norm(b - a)
    return total


def circle(r, c=(0.0, 0.0), turns=1):
    c = np.asarray(c)
    return Parametric(lambda t: c + r * np.stack([np.cos(2 * np.pi * turns * t), np.sin(2 * np.pi * turns * t)], -1))


class TestLength:
    def test_exact_for_polyline_and_segment(self):
        pl = Polyline([[0, 0], [3, 4], [3, 0]])
        assert curve_length(pl).value == 9.0
        assert curve_length(Segment.between((1, 1), (4, 5))).value == 5.0

    @pytest.mark.parametrize("r", [0.1, 1.0, 7.5])
    def test_circle(self, r):
        res = curve_length(circle(r), tol=1e-8)
        assert res.converged
        assert res.value == pytest.approx(2 * np.pi * r, rel=1e-7)

    def test_reparametrisation_invariance(self):
        a = curve_length(circle(1.0), tol=1e-9).value
        b = curve_length(Parametric(lambda t: circle(1.0).func(t**2)), tol=1e-9).value
        assert a == pytest.approx(b, rel=1e-7)

    def test_split_additive(self):
        pl = Polyline(np.random.default_rng(0).uniform(-1, 1, (7, 2)))
        left, right = pl.split(3)
        assert curve_length(left).value + curve_length(right).value == pytest.approx(curve_length(pl).value)

    def test_invalid_curves(self):
        with pytest.raises(PreconditionError):
            Polyline([[0, 0], [0, 0], [1, 1]])
        with pytest.raises(PreconditionError):
            Segment((0, 0), (1, 1), 1.0)
        with pytest.raises(PreconditionError):
            curve_length(circle(1.0), tol=0)

    def test_nonconvergence_is_flagged(self):
        res = curve_length(Parametric(lambda t: np.stack([t, np.sin(200 * t)], -1), 4), tol=1e-12, max_samples=64)
        assert not res.converged


class TestImageLength:
    @given(st.lists(st.floats(-3, 3), min_size=4, max_size=4), st.integers(0, 10**6))
    def test_linear_segment_exact(self, entries, seed):
        A = np.reshape(entries, (2, 2))
        f = g.linear(A, domain=g.square(2, 2.0))
        rng = np.random.default_rng(seed)
        p, q = rng.uniform(-1.5, 1.5, (2, 2))
        if np.linalg.norm(q - p) < 1e-6:
            return
        seg = Segment.between(p, q)
        assert image_length(f, seg).value == pytest.approx(np.linalg.norm(A @ (q - p)), rel=1e-9, abs=1e-12)

    @given(st.floats(0.05, 10), st.floats(0.05, 10), st.integers(0, 10**6))
    def test_ratio_between_singular_values(self, a, b, seed):
        f = g.diag(a, b)
        pts = np.random.default_rng(seed).uniform(-0.9, 0.9, (5, 2))
        d = distortion(f, Polyline(pts))
        assert min(a, b) * (1 - 1e-9) <= d.ratio <= max(a, b) * (1 + 1e-9)
        assert d.lower <= d.ratio <= d.upper

    def test_folding_polylines_against_exact_oracle(self):
        f = g.folding()
        rng = np.random.default_rng(11)
        for _ in range(200):
            v = rng.uniform(-0.99, 0.99, (5, 2))
            res = image_length(f, Polyline(v))
            exact = folded_length(v)
            assert res.converged
            assert abs(res.value - exact) <= max(res.estimated_error, 1e-12) + 1e-12
            assert exact == pytest.approx(curve_length(Polyline(v)).value, rel=1e-12)

    def test_winding_circle_doubles(self):
        # z -> z^2/|z| sends a centred circle onto itself twice
        for r in (0.2, 0.5, 0.8):
            ratio = distortion_ratio(g.winding(2), circle(r), tol=1e-9)
            assert ratio == pytest.approx(2.0, rel=1e-7)

    def test_off_centre_circle_winding_bound(self):
        ratio = distortion_ratio(g.winding(3), circle(0.3, c=(0.4, 0.1)), tol=1e-8)
        assert 1.0 <= ratio <= 3.0

    def test_adaptive_finds_hidden_kink(self):
        # kink placed just beside the initial sample grid
        F = lambda u: np.stack([np.abs(np.asarray(u) - 0.2501), np.zeros_like(u)], -1)
        res = adaptive_length(F, 1, 4, 1e-8)
        assert res.value == pytest.approx(0.2501 + 0.7499, rel=1e-8)

    def test_domain_error_reports_parameter(self):
        with pytest.raises(DomainError) as info:
            image_length(g.identity(), Polyline([[0, 0], [0.5, 0.5], [2, 0]]))
        assert info.value.parameter == 2.0
        with pytest.raises(DomainError) as info:
            image_length(g.identity(), circle(0.5, c=(0.0, 0.6)))
        assert 0.1 < info.value.parameter < 0.2  # exit where sin(2 pi t) = 0.8

    def test_degenerate(self):
        with pytest.raises(DegenerateCurveError):
            distortion(g.identity(), Parametric(lambda t: np.zeros(np.shape(t) + (2,))))

    def test_dimension_mismatch(self):
        with pytest.raises(PreconditionError):
            image_length(g.identity(3), Segment((0, 0), (1, 0), 0.5))
