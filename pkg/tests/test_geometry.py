import json
import math

import numpy as np
import pytest

import torsionlab as tl
from torsionlab.errors import ValidationError


def test_unit_ball_volumes():
    assert tl.unit_ball_volume(1) == 2.0
    assert tl.unit_ball_volume(2) == pytest.approx(math.pi, rel=1e-15)
    assert tl.unit_ball_volume(3) == pytest.approx(4.0 * math.pi / 3.0, rel=1e-15)


def test_equivalent_ball_radius_round_trip():
    for n in (2, 3):
        for v in (0.5, 1.0, math.pi):
            r = tl.equivalent_ball_radius(v, n)
            assert tl.unit_ball_volume(n) * r ** n == pytest.approx(v, rel=1e-12)


def test_exact_volumes():
    assert tl.Ball(2.0).exact_volume() == pytest.approx(4.0 * math.pi, rel=1e-14)
    assert tl.Ellipse((1.0, 1.5)).exact_volume() == pytest.approx(1.5 * math.pi, rel=1e-14)
    assert tl.Box([(-0.5, -0.5), (0.5, 0.5)]).exact_volume() == 1.0
    tri = tl.Polygon([(0, 0), (1, 0), (0, 1)])
    assert tri.exact_volume() == pytest.approx(0.5, rel=1e-14)
    stad = tl.Stadium((-1, 0), (1, 0), 0.5)
    assert stad.exact_volume() == pytest.approx(math.pi * 0.25 + 2.0, rel=1e-14)


def test_grid_volume_against_exact():
    dom = tl.Ellipse((1.0, 1.5))
    res = tl.volume(dom, resolution=1024)
    assert res.value == pytest.approx(dom.exact_volume(), rel=2e-3)


def test_containment_and_distance():
    b = tl.Ball(1.0)
    assert tl.contains(b, (0.3, 0.4))
    assert not tl.contains(b, (1.3, 0.0))
    assert tl.boundary_distance(b, (0.3, 0.4)) == pytest.approx(0.5, abs=1e-12)

    e = tl.Ellipse((1.0, 2.0))
    assert tl.contains(e, (0.0, 1.9))
    assert not tl.contains(e, (0.0, 2.1))
    # on-axis distances are exact; the bisection bound must match there
    assert tl.boundary_distance(e, (0.0, 0.0)) == pytest.approx(1.0, rel=1e-9)
    assert tl.boundary_distance(e, (0.9, 0.0)) == pytest.approx(0.1, rel=1e-6)

    sq = tl.Box([(-0.5, -0.5), (0.5, 0.5)])
    assert tl.boundary_distance(sq, (0.1, 0.2)) == pytest.approx(0.3, abs=1e-12)


def test_distance_is_interior_lower_bound():
    # a ball of the returned radius must stay inside the domain
    doms = [tl.Ball(1.0), tl.Ellipse((1.0, 2.0)),
            tl.Polygon([(-1, -1), (1, -1), (1, 1), (-1, 1)]),
            tl.Stadium((-1, 0), (1, 0), 0.6)]
    angles = np.linspace(0.0, 2.0 * math.pi, 17)[:-1]
    for dom in doms:
        pts = tl.sample_interior(dom, 40, seed=1)
        d = dom.distance_points(pts)
        assert np.all(d > 0.0)
        for x, r in zip(pts, d):
            ring = x + 0.999 * r * np.stack([np.cos(angles), np.sin(angles)], axis=1)
            assert dom.contains_points(ring).all()


def test_implicit_domain_distance_bound():
    disk = tl.Implicit(lambda p: np.sum(p ** 2, axis=1) < 1.0, (-1.1, -1.1), (1.1, 1.1))
    pts = tl.sample_interior(disk, 30, seed=2)
    d = disk.distance_points(pts)
    exact = 1.0 - np.sqrt(np.sum(pts ** 2, axis=1))
    assert np.all(d > 0.0)
    assert np.all(d <= exact + 1e-9)


def test_scaling_and_translation():
    e = tl.Ellipse((1.0, 1.5))
    s = tl.scale(e, 2.0)
    assert s.exact_volume() == pytest.approx(4.0 * e.exact_volume(), rel=1e-14)
    t = tl.translate(e, (0.5, -0.25))
    assert tl.contains(t, (0.5, -0.25))
    assert not tl.contains(t, (1.6, -0.25))
    with pytest.raises(ValidationError):
        tl.scale(e, 0.0)


def test_parse_domain_spec_round_trip():
    doms = [tl.Ball(0.75, center=(0.1, -0.2)),
            tl.Ellipse.from_flattening(0.5),
            tl.Box([(-0.5, -0.25), (0.5, 0.25)]),
            tl.Polygon([(0, 0), (2, 0), (1, 1)]),
            tl.Stadium((-1, 0), (1, 0), 0.5)]
    for dom in doms:
        back = tl.parse_domain_spec(json.dumps(dom.spec_dict()))
        assert back.spec_dict() == dom.spec_dict()


def test_parse_domain_spec_errors():
    with pytest.raises(ValidationError):
        tl.parse_domain_spec("not json")
    with pytest.raises(ValidationError):
        tl.parse_domain_spec('{"kind": "wedge"}')
    with pytest.raises(ValidationError):
        tl.parse_domain_spec('{"kind": "ball"}')
    with pytest.raises(ValidationError):
        tl.parse_domain_spec('{"kind": "stadium", "capsule": {"p": [0, 0]}}')


def test_canonical_spec_is_stable():
    dom = tl.Ellipse.from_flattening(0.25)
    assert tl.canonical_spec(dom) == tl.canonical_spec(tl.Ellipse((1.0, 1.25)))
    assert '"eps":0.25' in tl.canonical_spec(dom)


def test_sample_interior_deterministic_and_inside():
    dom = tl.Ellipse.from_flattening(0.3)
    a = tl.sample_interior(dom, 25, seed=7)
    b = tl.sample_interior(dom, 25, seed=7)
    assert np.array_equal(a, b)
    assert dom.contains_points(a).all()
    c = tl.sample_interior(dom, 25, seed=8)
    assert not np.array_equal(a, c)
    far = tl.sample_interior(dom, 10, seed=7, min_distance=0.2)
    assert np.all(dom.distance_points(far) >= 0.2)


def test_equivalent_ball_matches_volume():
    dom = tl.Ellipse((1.0, 1.5))
    eq = tl.equivalent_ball(dom)
    assert tl.unit_ball_volume(2) * eq.radius ** 2 == pytest.approx(
        dom.exact_volume(), rel=2e-3)
