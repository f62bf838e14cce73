import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.special import betainc

from bldkit import gallery as g
from bldkit.errors import BoundaryMarginError, EvaluationError, PreconditionError
from bldkit.mapping import (ConeSpec, MappingSpec, Region, cone_contains, cone_directions, cone_measure,
                            cone_measure_estimate, fd_jacobian, jacobian_at, jacobian_batch, angle_to,
                            unit_ball_volume)


def smooth_map():
    def f(p):
        x, y = p[..., 0], p[..., 1]
        return np.stack([np.sin(x * y), np.exp(x) + y**3], axis=-1)

    def jac(p):
        x, y = p[..., 0], p[..., 1]
        c = np.cos(x * y)
        return np.stack([np.stack([y * c, x * c], -1), np.stack([np.exp(x), 3 * y**2], -1)], -2)

    return f, jac


def cone_oracle(n, r, delta):
    """Cone volume from the regularised incomplete beta function."""
    if delta > math.pi / 2:
        return unit_ball_volume(n) * r**n - cone_oracle(n, r, math.pi - delta)
    return unit_ball_volume(n) * r**n * betainc((n - 1) / 2, 0.5, math.sin(delta) ** 2) / 2


class TestRegion:
    def test_box_and_ball_geometry(self):
        b = Region.box((0, 0), (2, 1))
        assert b.center == (1.0, 0.5) and b.half_widths.tolist() == [1.0, 0.5]
        assert b.inradius == 0.5 and math.isclose(b.diameter, math.sqrt(5))
        d = Region.ball((0, 0, 0), 2.0)
        assert d.dim == 3 and d.inradius == 2.0 and d.diameter == 4.0

    @pytest.mark.parametrize("args", [("box", (0, 0), (1,)), ("ball", (0,), (1, 2)), ("box", (0,), (-1,)),
                                      ("cube", (0,), (1,))])
    def test_invalid(self, args):
        with pytest.raises(PreconditionError):
            Region(*args)

    def test_boundary_loop_is_counterclockwise(self):
        u = np.linspace(0, 1, 2001)
        for r in (Region.box((-1, -2), (3, 1)), Region.ball((0.5, 0.5), 2.0)):
            p = r.boundary_loop(u)
            area = 0.5 * np.sum(p[:-1, 0] * p[1:, 1] - p[1:, 0] * p[:-1, 1])
            exact = 12.0 if r.kind == "box" else math.pi * 4
            assert area == pytest.approx(exact, rel=1e-4)

    @given(st.integers(3, 12), st.floats(0.0, 0.3), st.booleans())
    def test_grid_inside(self, res, margin, ball):
        r = Region.ball((0.2, -0.1), 1.0) if ball else Region.box((-1, 0), (1, 2))
        pts = r.grid(res, margin)
        assert len(pts) > 0
        assert np.all(r.contains(pts, margin - 1e-12))

    @given(st.integers(0, 10**6))
    def test_distance_to_boundary_sign(self, seed):
        r = Region.box((0, 0), (1, 2))
        p = np.random.default_rng(seed).uniform(-1, 3, size=(50, 2))
        d = r.distance_to_boundary(p)
        assert np.array_equal(d > 0, np.all((p > r.lower) & (p < r.upper), axis=1))


class TestJacobian:
    def test_analytic_matches_oracle(self):
        f, jac = smooth_map()
        spec = MappingSpec("s", Region.box((-1, -1), (1, 1)), f)
        pts = np.random.default_rng(1).uniform(-0.8, 0.8, (20, 2))
        est, ok = jacobian_batch(spec, pts, 1e-5)
        assert ok.all()
        np.testing.assert_allclose(est, jac(pts), atol=1e-8)

    def test_fd_second_order(self):
        # central differences: error shrinks by ~100 per decade of step
        f, jac = smooth_map()
        p = np.array([[0.3, -0.4], [0.7, 0.2]])
        errs = [np.abs(fd_jacobian(f, p, h) - jac(p)).max() for h in (1e-2, 1e-3, 1e-4)]
        orders = [math.log10(errs[i] / errs[i + 1]) for i in range(2)]
        assert all(1.8 < o < 2.2 for o in orders), orders

    def test_kink_is_unreliable(self):
        # |x| sampled 0.75 steps from the kink: step and step/2 disagree
        spec = MappingSpec("abs", Region.box((-1, -1), (1, 1)), lambda p: np.abs(p))
        h = 1e-3
        _, ok = jacobian_batch(spec, [[0.75 * h, 0.5], [0.5, 0.5]], h)
        assert ok.tolist() == [False, True]

    def test_boundary_margin(self):
        with pytest.raises(BoundaryMarginError):
            jacobian_at(g.folding(), (1.0, 0.0))
        s = jacobian_at(g.folding(3.0), (1.0, 2.0))
        assert s.matrix.tolist() == [[1.0, 0.0], [0.0, 1.0]] and s.determinant == 1.0

    def test_nonfinite(self):
        spec = MappingSpec("log", Region.box((-1, -1), (1, 1)), lambda p: np.log(p))
        with pytest.raises(EvaluationError), np.errstate(invalid="ignore"):
            jacobian_batch(spec, [[-0.5, 0.5]], 1e-4)

    def test_winding_singular_values(self):
        s = jacobian_at(g.winding(2), (0.3, 0.4))
        assert s.singular_values.tolist() == pytest.approx([2.0, 1.0])


class TestCone:
    @pytest.mark.parametrize("n", [2, 3])
    @pytest.mark.parametrize("delta", [0.05, 0.4, math.pi / 2, 2.5, math.pi])
    def test_closed_forms_match_beta_oracle(self, n, delta):
        axis = np.eye(n)[0]
        for r in (0.5, 1.0, 3.0):
            assert cone_measure(ConeSpec(axis, r, delta)) == pytest.approx(cone_oracle(n, r, delta), rel=1e-12)

    def test_monte_carlo_4d(self):
        c = ConeSpec(np.eye(4)[1], 1.3, 0.7)
        value, se = cone_measure_estimate(c, samples=10**6, seed=3)
        assert abs(value - cone_oracle(4, 1.3, 0.7)) < 3 * se

    def test_monte_carlo_agrees_with_closed_form_3d(self):
        # brute force: rejection sampling in the bounding cube
        rng = np.random.default_rng(0)
        u = rng.uniform(-1, 1, (400000, 3))
        u = u[np.linalg.norm(u, axis=1) <= 1]
        frac = np.mean(angle_to(np.array([0, 0, 1.0]), u) <= 0.9)
        est = frac * unit_ball_volume(3)
        assert est == pytest.approx(cone_measure(ConeSpec((0, 0, 1), 1.0, 0.9)), rel=0.01)

    @given(st.floats(0.01, 3.1), st.floats(0.1, 10.0), st.integers(2, 3))
    def test_scaling(self, delta, r, n):
        c1 = cone_measure(ConeSpec(np.eye(n)[0], 1.0, delta))
        assert cone_measure(ConeSpec(np.eye(n)[0], r, delta)) == pytest.approx(c1 * r**n, rel=1e-12)

    def test_invalid(self):
        with pytest.raises(PreconditionError):
            ConeSpec((1.0, 1.0), 1.0, 0.5)
        with pytest.raises(PreconditionError):
            ConeSpec((1.0, 0.0), 1.0, 0.0)

    @given(st.integers(0, 10**6), st.floats(0.01, 1.5), st.integers(2, 4))
    def test_directions_inside(self, seed, delta, n):
        axis = np.random.default_rng(seed).standard_normal(n)
        axis /= np.linalg.norm(axis)
        d = cone_directions(axis, delta, 9)
        assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
        assert np.all(angle_to(axis, d) <= delta + 1e-9)
        assert cone_contains(ConeSpec(axis, 1.0 + 1e-9, delta + 1e-9), d).all()
        # rim is reached
        assert angle_to(axis, d).max() == pytest.approx(delta)
