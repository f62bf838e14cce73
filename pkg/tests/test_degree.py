import numpy as np
import pytest
from hypothesis import given, strategies as st

import bldkit.gallery as g
from bldkit.degree import PREIMAGES, WINDING, DegreeConfig, classify_sense, degree
from bldkit.errors import PreconditionError, TargetTooCloseError
from bldkit.mapping import Region

DOUBLE = DegreeConfig(boundary_samples=128)


def winding_preimages(k, y):
    """All preimages of y under (r, t) -> (r, k t): k points on the circle |z| = |y|."""
    r, t = np.hypot(*y), np.arctan2(y[1], y[0])
    ang = (t + 2 * np.pi * np.arange(k)) / k
    return r * np.stack([np.cos(ang), np.sin(ang)], -1)


@pytest.mark.parametrize("name,center,radius,target,expected", [
    ("identity", (0, 0), 0.5, (0.1, 0.2), 1),
    ("winding_2", (0, 0), 0.5, (0, 0), 2),
    ("winding_2", (0, 0), 0.5, (0.25, 0), 2),
    ("winding_3", (0, 0), 0.7, (-0.1, 0.3), 3),
    ("reflection", (0, 0), 0.5, (0.1, 0.1), -1),
    ("folding", (0, 0), 0.5, (0.3, 0), 0),
    ("folding", (-0.5, 0), 0.3, (0.5, 0.1), -1),
    ("folding", (0.5, 0), 0.3, (0.5, 0.1), 1),
])
def test_degree_table(name, center, radius, target, expected):
    f = g.gallery_entry(name).mapping
    D = Region.ball(center, radius)
    a = degree(f, D, target)
    b = degree(f, D, target, DOUBLE)
    assert a.degree == b.degree == expected
    assert a.method == WINDING


@pytest.mark.parametrize("name,target", [("identity", (0.1, 0.2)), ("winding_2", (0.25, 0.0)),
                                         ("reflection", (0.1, 0.1)), ("folding", (0.3, 0.0)),
                                         ("winding_3", (0.0, 0.0))])
def test_methods_agree(name, target):
    f = g.gallery_entry(name).mapping
    D = Region.ball((0, 0), 0.5)
    w = degree(f, D, target)
    p = degree(f, D, target, DegreeConfig(method=PREIMAGES))
    assert p.method == PREIMAGES and w.degree == p.degree


@given(st.integers(1, 4), st.floats(0.05, 0.6), st.floats(-np.pi, np.pi))
def test_winding_against_preimage_oracle(k, rho, phi):
    y = rho * np.array([np.cos(phi), np.sin(phi)])
    f = g.winding(k)
    D = Region.ball((0, 0), 0.8)
    expected = len(winding_preimages(k, y))
    assert degree(f, D, y).degree == expected
    found = degree(f, D, y, DegreeConfig(method=PREIMAGES)).preimages
    pts = np.array([p for p, _ in found])
    oracle = winding_preimages(k, y)
    assert len(pts) == k
    assert max(np.min(np.linalg.norm(oracle - p, axis=1)) for p in pts) < 1e-6


def test_target_outside_image_gives_zero():
    assert degree(g.identity(), Region.ball((0, 0), 0.3), (0.8, 0.8)).degree == 0
    assert degree(g.identity(3), Region.ball((0, 0, 0), 0.3), (0.8, 0.1, 0)).degree == 0


def test_three_dimensional():
    f = g.gallery_entry("cyl_winding_2").mapping
    D = Region.ball((0, 0, 0.1), 0.5)
    assert degree(f, D, (0.25, 0, 0.1)).degree == 2
    assert degree(f, D, (0.25, 0, 0.1), DOUBLE).degree == 2
    assert degree(g.identity(3), D, (0.1, 0.0, 0.2)).degree == 1


def test_target_on_boundary_image():
    with pytest.raises(TargetTooCloseError):
        degree(g.identity(), Region.ball((0, 0), 0.5), (0.5, 0.0))


def test_subdomain_must_fit():
    with pytest.raises(PreconditionError):
        degree(g.identity(), Region.ball((0.8, 0), 0.5), (0.8, 0.0))


def test_gallery_degree_samples():
    for e in g.gallery():
        for s in e.ground_truth.degree_at_samples:
            assert degree(e.mapping, s.region, s.target).degree == s.degree, e.name


@pytest.mark.parametrize("name", ["identity", "winding_2", "shear", "reflection", "folding", "cube_x"])
def test_classify_sense_matches_ground_truth(name):
    e = g.gallery_entry(name)
    res = classify_sense(e.mapping, DegreeConfig(pairs=12))
    assert res.verdict == e.ground_truth.sense
    assert res.errors <= res.pairs // 2


def test_folding_has_zero_and_negative_evidence():
    res = classify_sense(g.folding(), DegreeConfig(pairs=20))
    degs = {r.degree for r in res.evidence}
    assert 0 in degs and -1 in degs
