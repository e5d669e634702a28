import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chddp.geometry import (ConvexPolygon, Halfspace, Point2, closest_point, contains, inflate,
                            segment_intersects, wrap_angle)

SQ = ConvexPolygon.rectangle(0, 0, 1, 1)
coord = st.floats(-3, 4, allow_nan=False)


def regular_polygon(k, r=1.0, cx=0.0, cy=0.0, phase=0.0):
    a = phase + 2 * np.pi * np.arange(k) / k
    return ConvexPolygon(np.column_stack([cx + r * np.cos(a), cy + r * np.sin(a)]))


@st.composite
def polygons(draw):
    k = draw(st.integers(3, 8))
    r = draw(st.floats(0.2, 2.0))
    phase = draw(st.floats(0, 2 * np.pi))
    return regular_polygon(k, r, draw(st.floats(-1, 1)), draw(st.floats(-1, 1)), phase)


@pytest.mark.parametrize("pt, inside", [((0.5, 0.5), True), ((1.0, 0.5), True), ((1.5, 0.5), False)])
def test_contains_examples(pt, inside):
    assert contains(SQ, Point2(*pt)) is inside


@pytest.mark.parametrize("pt, proj, dist", [
    ((0.5, 0.5), (0.5, 0.5), 0.0),
    ((2.0, 0.5), (1.0, 0.5), 1.0),
    ((2.0, 2.0), (1.0, 1.0), math.sqrt(2)),
])
def test_closest_point_examples(pt, proj, dist):
    q, d = closest_point(SQ, Point2(*pt))
    np.testing.assert_allclose(q, proj, atol=1e-12)
    assert d == pytest.approx(dist, abs=1e-12)


def test_inflate_zero_is_identity():
    np.testing.assert_allclose(inflate(SQ, 0.0).vertices, SQ.vertices)


def test_inflate_square():
    big = inflate(SQ, 0.1)
    lo, hi = big.vertices.min(axis=0), big.vertices.max(axis=0)
    np.testing.assert_allclose(lo, [-0.1, -0.1], atol=1e-12)
    np.testing.assert_allclose(hi, [1.1, 1.1], atol=1e-12)
    assert len(big) == 4


def test_inflate_triangle_clearance():
    tri = ConvexPolygon([(0, 0), (1, 0), (0.5, math.sqrt(3) / 2)])
    big = inflate(tri, 0.2)
    # sample the new boundary and measure distance to the original triangle
    V = big.vertices
    ts = np.linspace(0, 1, 334, endpoint=False)
    pts = np.concatenate([V[i] + ts[:, None] * (V[(i + 1) % 3] - V[i]) for i in range(3)])
    d = np.array([closest_point(tri, p)[1] for p in pts])
    half_vertex = math.radians(30)
    assert d.min() >= 0.2 - 1e-9
    assert d.max() <= 0.2 / math.sin(half_vertex) + 1e-9


def test_inflate_negative_margin_rejected():
    with pytest.raises(ValueError):
        inflate(SQ, -0.1)


@pytest.mark.parametrize("p, q, hit", [
    ((-1, 0.5), (2, 0.5), True),
    ((-1, 2), (2, 2), False),
    ((-1, 1), (2, 1), False),
])
def test_segment_examples(p, q, hit):
    assert segment_intersects(SQ, Point2(*p), Point2(*q)) is hit


def test_segment_through_corner_only_is_free():
    assert not segment_intersects(SQ, (0, 2), (2, 0))
    assert segment_intersects(SQ, (0, 1.5), (1.5, 0))


def test_nonconvex_rejected():
    with pytest.raises(ValueError, match="obstacle not convex"):
        ConvexPolygon([(0, 0), (2, 0), (1, 0.5), (2, 2), (0, 2)])


def test_clockwise_rejected():
    with pytest.raises(ValueError, match="obstacle not convex"):
        ConvexPolygon([(0, 0), (0, 1), (1, 1), (1, 0)])


def test_halfspace_needs_unit_normal():
    with pytest.raises(ValueError):
        Halfspace((2.0, 0.0), 1.0)
    h = Halfspace.from_raw((2.0, 0.0), 2.0)
    assert h.normal == (1.0, 0.0) and h.offset == 1.0


def test_point_rejects_nan():
    with pytest.raises(ValueError):
        Point2(float("nan"), 0.0)


def test_rectangle_halfspaces_outward():
    for h in SQ.halfspaces():
        assert h.value((0.5, 0.5)) < 0


def test_centroid_of_rectangle():
    np.testing.assert_allclose(ConvexPolygon.rectangle(1, 2, 3, 6).centroid(), [2, 4])


def test_wrap_angle_range():
    a = np.linspace(-20, 20, 1001)
    w = wrap_angle(a)
    assert np.all(w > -np.pi) and np.all(w <= np.pi)
    np.testing.assert_allclose(np.cos(w), np.cos(a), atol=1e-12)
    assert wrap_angle(-np.pi) == pytest.approx(np.pi)


@given(polygons(), coord, coord)
def test_contains_iff_zero_distance(poly, x, y):
    q, d = closest_point(poly, (x, y))
    assert contains(poly, (x, y)) == (d <= 1e-12)
    assert contains(poly, q, tol=1e-9)


@given(polygons(), st.floats(0, 0.5), st.floats(0, 0.5))
def test_inflate_monotone(poly, m1, m2):
    m1, m2 = sorted((m1, m2))
    small, big = inflate(poly, m1), inflate(poly, m2)
    assert all(contains(big, v, tol=1e-9) for v in small.vertices)


@given(st.integers(3, 6), coord, coord)
def test_closest_point_beats_grid(k, x, y):
    poly = regular_polygon(k, 1.0, 0.5, 0.5)
    _, d = closest_point(poly, (x, y))
    xmin, ymin, xmax, ymax = poly.bounds()
    gx, gy = np.meshgrid(np.linspace(xmin, xmax, 200), np.linspace(ymin, ymax, 200))
    G = np.column_stack([gx.ravel(), gy.ravel()])
    inside = np.all(G @ poly.A.T - poly.b <= 1e-12, axis=1)
    brute = np.hypot(G[inside, 0] - x, G[inside, 1] - y).min()
    res = max(xmax - xmin, ymax - ymin) / 199
    assert d <= brute + 1e-12
    assert d >= brute - res * math.sqrt(2)
