import numpy as np
import pytest
from hypothesis import given, strategies as st

import bldkit.gallery as g
from bldkit.checks import (EXCLUDED, CurveFamily, GridConfig, build_family, check_analytic, check_geometric,
                           sample_jacobians)
from bldkit.curves import Segment
from bldkit.errors import ConfigurationError, InconclusiveError, PreconditionError
from bldkit.mapping import MappingSpec, Region


def test_identity_passes_at_one():
    rep = check_analytic(g.identity(), GridConfig(20), M=1)
    assert rep.passed and rep.violation_count == 0 and rep.best_M_analytic == 1.0


def test_stretch_constants():
    rep = check_analytic(g.diag(2, 0.5), GridConfig(30), M=1.9)
    assert rep.best_M_analytic == 2.0
    assert not rep.passed and rep.violation_count == 900


def test_violations_sorted_and_capped():
    rep = check_analytic(g.diag(2, 0.5), GridConfig(30), M=1.5, max_violations=7)
    pts = [v[0] for v in rep.violations]
    assert len(pts) == 7 and pts == sorted(pts)


def test_folding_sign_fraction():
    rep = check_analytic(g.folding(), GridConfig(100), M=1.5)
    assert rep.negative_det_fraction == 0.5
    assert rep.best_M_analytic == 1.0 and not rep.passed


def test_locus_exclusion_counts():
    # odd resolution puts a grid column on the fold
    rep = check_analytic(g.folding(), GridConfig(101), M=1.5)
    assert rep.excluded_count == 101
    assert rep.negative_det_fraction == pytest.approx(50 * 101 / 101**2)


def test_degenerate_sigma_min():
    rep = check_analytic(g.cube_x(), GridConfig(41), M=1.5)
    assert rep.min_sigma_min < 1e-3 and not rep.passed


def test_all_excluded_is_inconclusive():
    f = MappingSpec("x", Region.box((-1, -1), (1, 1)), lambda p: p, locus_distance=lambda p: np.zeros(len(p)))
    with pytest.raises(InconclusiveError):
        check_analytic(f, GridConfig(5), M=1)
    assert np.all(sample_jacobians(f, GridConfig(5)).status == EXCLUDED)


def test_grid_config_validation():
    with pytest.raises(PreconditionError):
        GridConfig(10, margin=1e-6, fd_step=1e-5).resolve(Region.box((0, 0), (1, 1)))
    with pytest.raises(PreconditionError):
        check_analytic(g.identity(), GridConfig(5), M=0.5)


@given(st.floats(0.2, 5), st.floats(0.2, 5), st.floats(1.0, 6.0), st.floats(0.0, 3.0))
def test_analytic_verdict_monotone_in_M(a, b, M, extra):
    f = g.diag(a, b)
    if check_analytic(f, GridConfig(5), M=M).passed:
        assert check_analytic(f, GridConfig(5), M=M + extra).passed


@given(st.lists(st.floats(-3, 3), min_size=4, max_size=4))
def test_linear_verdict_matches_singular_values(entries):
    A = np.reshape(entries, (2, 2))
    sv = np.linalg.svd(A, compute_uv=False)
    if sv[-1] < 1e-3 or np.linalg.det(A) < 0:
        return
    rep = check_analytic(g.linear(A), GridConfig(4))
    assert rep.best_M_analytic == pytest.approx(max(sv[0], 1 / sv[-1]), rel=1e-12)


class TestGeometric:
    def test_empty_family(self):
        with pytest.raises(ConfigurationError):
            check_geometric(g.identity(), families=())
        with pytest.raises(ConfigurationError):
            CurveFamily("spirals")

    def test_families_stay_inside(self):
        for region in (Region.box((-1, 0), (2, 1)), Region.ball((0, 0, 0), 1.0)):
            for kind in ("axis_segments", "random_segments", "random_polylines", "circles", "concentric_circles"):
                for _, c in build_family(region, CurveFamily(kind, 10)):
                    u = np.linspace(0, c.n_pieces, 200)
                    assert np.all(region.contains(c.at(u)))

    def test_stretch_axis_segments(self):
        rep = check_geometric(g.diag(2, 0.5), CurveFamily("axis_segments", 16))
        assert rep.max_ratio == pytest.approx(2.0, rel=1e-12) and rep.min_ratio == pytest.approx(0.5, rel=1e-12)
        assert rep.best_M_geometric == pytest.approx(2.0, rel=1e-12)

    def test_folding_isometry(self):
        rep = check_geometric(g.folding(), CurveFamily("random_polylines", 100, seed=2), M=1.0)
        assert rep.passed and rep.nonconverged_count == 0
        assert abs(rep.max_ratio - 1) < 1e-6 and abs(rep.min_ratio - 1) < 1e-6

    def test_cube_x_violates_lower_bound(self):
        short = Segment((-0.05, 0.0), (1.0, 0.0), 0.1)
        rep = check_geometric(g.cube_x(), families=(), curves=[short], M=1.5)
        assert rep.violation_count == 1 and not rep.passed

    def test_geometric_never_exceeds_analytic(self):
        for name in ("linear", "shear", "winding_2", "winding_3"):
            f = g.gallery_entry(name).mapping
            geo = check_geometric(f, CurveFamily("random_polylines", 30))
            ana = check_analytic(f, GridConfig(40))
            assert geo.best_M_geometric <= ana.best_M_analytic * (1 + 1e-6)
