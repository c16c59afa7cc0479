import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import clip_polyline, exact_flatness
from pbernoulli.energy import ProblemSpec
from pbernoulli.freeboundary import (EmptyIntersection, FreeBoundary, InsufficientRoom, PointClass,
                                     classify_point, extract_free_boundary, flatness,
                                     flatness_report, flux_balance, slab_height)
from pbernoulli.grid import ScalarField2D
from pbernoulli.scenarios import scenario_minimizer, scenario_spec

LINE = FreeBoundary.from_segments([[(-2.0, 0.0), (2.0, 0.0)]])
WEDGE = FreeBoundary.from_segments([[(2.0, 0.0), (0.0, 0.0), (0.0, 2.0)]])


def polylines(draw_count=12):
    pts = st.lists(st.tuples(st.floats(-1.5, 1.5), st.floats(-1.5, 1.5)),
                   min_size=3, max_size=draw_count)
    return pts.map(lambda p: np.array(p, dtype=float))


# -- extraction ---------------------------------------------------------------

def test_vertical_line_contour():
    u = ScalarField2D.on_square(lambda x, y: x - 0.3, n=64)
    g = extract_free_boundary(u)
    assert not g.empty
    assert np.max(np.abs(g.vertices[:, 0] - 0.3)) <= u.h


def test_circle_contour_is_closed():
    u = ScalarField2D.on_square(lambda x, y: x * x + y * y - 0.25, n=128)
    g = extract_free_boundary(u)
    r = np.hypot(*g.vertices.T)
    assert np.max(np.abs(r - 0.5)) <= u.h
    assert list(g.closed) == [True]
    assert g.length() == pytest.approx(math.pi, rel=1e-2)


def test_negative_field_has_empty_boundary():
    g = extract_free_boundary(ScalarField2D.on_square(lambda x, y: 0 * x - 1, n=16))
    assert g.empty and g.vertices.shape == (0, 2)


def test_vertices_sit_on_sign_changing_edges():
    u = ScalarField2D.on_square(lambda x, y: np.sin(3 * x) + np.cos(4 * y) - 0.3, n=64)
    g = extract_free_boundary(u)
    V = g.vertices
    fx = (V[:, 0] - u.origin[0]) / u.h
    fy = (V[:, 1] - u.origin[1]) / u.h
    on_x_edge = np.isclose(fy, np.round(fy), atol=1e-9)
    on_y_edge = np.isclose(fx, np.round(fx), atol=1e-9)
    assert np.all(on_x_edge | on_y_edge)
    assert np.max(np.abs(u.interpolate(V[:, 0], V[:, 1]))) <= 1e-9


def test_csv_export(tmp_path):
    u = ScalarField2D.on_square(lambda x, y: x * x + y * y - 0.25, n=32)
    path = extract_free_boundary(u).to_csv(tmp_path / "gamma.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "polyline,x,y" and len(lines) > 10


# -- slab height --------------------------------------------------------------

def test_slab_height_examples():
    assert slab_height(LINE, (0, 0), 1.0, (0, 1)) == pytest.approx(0.0, abs=1e-15)
    for th in (0.1, 0.7, 1.3):
        nu = (math.sin(th), math.cos(th))
        assert slab_height(LINE, (0, 0), 1.0, nu) == pytest.approx(abs(math.sin(th)), abs=1e-12)
    s = 1 / math.sqrt(2)
    assert slab_height(WEDGE, (0, 0), 1.0, (s, -s)) == pytest.approx(s, abs=1e-12)


def test_slab_height_errors():
    with pytest.raises(EmptyIntersection):
        slab_height(LINE, (0, 5), 1.0, (0, 1))
    with pytest.raises(ValueError):
        slab_height(LINE, (0, 0), 1.0, (0, 2))


@settings(max_examples=50, deadline=None)
@given(pl=polylines(), th=st.floats(0, 2 * math.pi), r=st.floats(0.1, 1.0))
def test_slab_height_sign_symmetry(pl, th, r):
    g = FreeBoundary.from_segments([pl])
    x0 = pl[1]
    nu = np.array([math.cos(th), math.sin(th)])
    assert slab_height(g, x0, r, nu) == slab_height(g, x0, r, -nu)


# -- flatness -----------------------------------------------------------------

def test_flatness_examples():
    assert flatness(LINE, (0.3, 0), 1.0).h <= 1e-3
    sf = flatness(WEDGE, (0, 0), 1.0)
    assert abs(sf.h - 1 / math.sqrt(2)) <= 1e-3
    assert all(sf.h <= row[1] + 1e-15 for row in sf.table)
    x = np.linspace(-1.5, 1.5, 6001)
    sine = FreeBoundary.from_segments([np.column_stack([x, 0.05 * np.sin(20 * x)])])
    assert abs(flatness(sine, (0, 0), 1.0).h / 0.05 - 1) <= 0.1


def test_flatness_needs_enough_directions():
    with pytest.raises(ValueError):
        flatness(LINE, (0, 0), 1.0, n_dirs=16)


@settings(max_examples=60, deadline=None)
@given(pl=polylines(), r=st.floats(0.05, 1.0))
def test_flatness_matches_convex_hull_oracle(pl, r):
    g = FreeBoundary.from_segments([pl])
    x0 = pl[len(pl) // 2]
    exact = exact_flatness(clip_polyline(pl, x0, r))
    h = flatness(g, x0, r).h
    assert h >= exact - 1e-12
    assert h - exact <= 1e-3 * r
    assert h <= r


@settings(max_examples=20, deadline=None)
@given(pl=polylines(), radii=st.lists(st.floats(0.05, 1.0), min_size=5, max_size=5, unique=True))
def test_flatness_non_decreasing_in_radius(pl, radii):
    g = FreeBoundary.from_segments([pl])
    x0 = pl[len(pl) // 2]
    hs = [flatness(g, x0, r).h for r in sorted(radii)]
    assert all(b >= a - 1e-9 for a, b in zip(hs, hs[1:]))


@settings(max_examples=40, deadline=None)
@given(pl=polylines(), th=st.floats(0, 2 * math.pi), shift=st.tuples(st.floats(-3, 3), st.floats(-3, 3)),
       r=st.floats(0.1, 1.0))
def test_flatness_rigid_motion_invariance(pl, th, shift, r):
    R = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
    moved = pl @ R.T + np.asarray(shift)
    k = len(pl) // 2
    a = flatness(FreeBoundary.from_segments([pl]), pl[k], r).h
    b = flatness(FreeBoundary.from_segments([moved]), moved[k], r).h
    assert abs(a - b) <= 1e-6


def test_classification_examples():
    for h0 in (2e-3, 0.5, 0.9):
        assert classify_point(LINE, (0, 0), 1.0, h0) is PointClass.FLAT
    assert classify_point(WEDGE, (0, 0), 1.0, 0.5) is PointClass.NONFLAT
    assert classify_point(WEDGE, (0, 0), 1.0, 0.9) is PointClass.FLAT
    with pytest.raises(ValueError):
        classify_point(LINE, (0, 0), 1.0, 1.5)


def test_flatness_report_serializes():
    rows = flatness_report(WEDGE, (0, 0), [0.5, 1.0], h0=0.5)
    assert [r["verdict"] for r in rows] == ["NonFlat", "NonFlat"]
    json.dumps(rows)


# -- flux balance -------------------------------------------------------------

def two_plane(alpha, beta, n=128):
    return ScalarField2D.on_square(lambda x, y: alpha * np.maximum(x, 0) - beta * np.maximum(-x, 0), n=n)


@pytest.mark.parametrize("p,beta,Lambda", [(2.0, 1.0, 3.0), (2.5, 0.7, 1.2), (3.0, 1.0, 2.0)])
def test_flux_balance_zero_on_balanced_two_plane(p, beta, Lambda):
    alpha = (beta ** p + Lambda / (p - 1)) ** (1 / p)
    u = two_plane(alpha, beta)
    spec = ProblemSpec.from_Lambda(p, Lambda)
    fb = flux_balance(u, extract_free_boundary(u), spec)
    assert fb.G.size > 50
    assert np.max(np.abs(fb.G)) <= 1e-3
    doubled = flux_balance(u, extract_free_boundary(u), ProblemSpec.from_Lambda(p, 2 * Lambda))
    assert np.all(doubled.G < 0)


def test_flux_balance_on_strip_minimizer():
    res = scenario_minimizer("strip", 2.0, 256)
    fb = flux_balance(res.u, extract_free_boundary(res.u), scenario_spec("strip", 2.0))
    assert fb.quantiles()["relative_median_abs"] <= 0.05


def test_flux_balance_without_room():
    u = ScalarField2D.on_square(lambda x, y: x - 0.98, n=64)
    with pytest.raises(InsufficientRoom):
        flux_balance(u, extract_free_boundary(u), ProblemSpec.from_Lambda(2.0, 1.0))
