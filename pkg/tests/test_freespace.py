import numpy as np
import pytest
from hypothesis import given, strategies as st

from chddp.freespace import (EmptyRegionError, FreeSpace, SeedInCollisionError, chebyshev_center, grow_region,
                             nearest_in_polygon)
from chddp.geometry import ConvexPolygon, Halfspace, Point2, contains, inflate
from chddp.world import load_bundled

BOX10 = ConvexPolygon.rectangle(0, 0, 10, 10)
OBST = ConvexPolygon.rectangle(4, 4, 6, 6)


def unit_region(x0, y0, seed):
    return grow_region([], ConvexPolygon.rectangle(x0, y0, x0 + 1, y0 + 1), Point2(*seed))


def test_chebyshev_unit_square():
    c, r = chebyshev_center(ConvexPolygon.rectangle(0, 0, 1, 1).halfspaces())
    assert (c.x, c.y) == pytest.approx((0.5, 0.5), abs=1e-9)
    assert r == pytest.approx(0.5, abs=1e-9)


def test_chebyshev_right_triangle_incenter():
    tri = ConvexPolygon([(0, 0), (3, 0), (0, 4)])
    a, b, c = 3.0, 4.0, 5.0
    r_oracle = (a + b - c) / 2
    center, r = chebyshev_center(tri.halfspaces())
    assert r == pytest.approx(r_oracle, abs=1e-9)
    assert (center.x, center.y) == pytest.approx((r_oracle, r_oracle), abs=1e-7)


def test_chebyshev_slab_picks_y_zero():
    center, r = chebyshev_center([Halfspace((1.0, 0.0), 1.0), Halfspace((-1.0, 0.0), 1.0)])
    assert r == pytest.approx(1.0)
    assert (center.x, center.y) == pytest.approx((0.0, 0.0), abs=1e-9)


def test_chebyshev_empty():
    with pytest.raises(EmptyRegionError, match="empty region"):
        chebyshev_center([Halfspace((1.0, 0.0), -1.0), Halfspace((-1.0, 0.0), -1.0)])


def test_grow_region_empty_world_is_bounds():
    reg = grow_region([], BOX10, Point2(5, 5))
    assert reg.chebyshev_radius == pytest.approx(5.0)
    np.testing.assert_allclose(sorted(map(tuple, reg.vertices().round(9))),
                               [(0, 0), (0, 10), (10, 0), (10, 10)], atol=1e-9)


def test_grow_region_separates_obstacle():
    reg = grow_region([OBST], BOX10, Point2(2, 5))
    normals = [(h.normal, h.offset) for h in reg.halfspaces]
    assert any(np.allclose(n, (1, 0)) and o == pytest.approx(4.0) for n, o in normals)
    rng = np.random.default_rng(0)
    pts = rng.uniform(0, 10, size=(10_000, 2))
    inside = pts[[reg.contains(p) for p in pts]]
    assert len(inside) > 1000
    assert not np.any(np.all(inside @ OBST.A.T - OBST.b < -1e-9, axis=1))


def test_grow_region_seed_in_collision():
    with pytest.raises(SeedInCollisionError, match="seed in collision"):
        grow_region([OBST], BOX10, Point2(5, 5))


def test_grow_region_deterministic():
    a = grow_region([OBST], BOX10, Point2(2, 3))
    b = grow_region([OBST], BOX10, Point2(2, 3))
    assert a.halfspaces == b.halfspaces


def test_membership_examples():
    fs = FreeSpace((unit_region(0, 0, (0.5, 0.5)), unit_region(0.5, 0, (1.2, 0.5))), BOX10)
    assert fs.membership((1.2, 0.5, 0.3)) == 1
    assert fs.membership((0.75, 0.5, 0.0)) == 0  # overlap: first index
    assert fs.membership((5.0, 5.0, 0.0)) is None
    world = load_bundled("central_block")
    fs = FreeSpace.from_seeds(world.collision_obstacles, world.bounds_poly, [Point2(1, 1), Point2(5, 1)])
    assert fs.membership((3.0, 2.0, 0.0)) is None  # obstacle centre
    np.testing.assert_array_equal(fs.membership_all(np.array([[1, 1, 0], [5, 1, 0], [3, 2, 0]])), [0, 1, -1])


def test_project_examples():
    fs = FreeSpace((unit_region(0, 0, (0.5, 0.5)),), BOX10)
    np.testing.assert_array_equal(fs.project_to_free((0.3, 0.4, 1.0)), (0.3, 0.4, 1.0))
    np.testing.assert_allclose(fs.project_to_free((2.0, 0.5, 0.7)), (1.0, 0.5, 0.7), atol=1e-9)
    two = FreeSpace((unit_region(0, 0, (0.5, 0.5)), unit_region(2, 0, (2.5, 0.5))), BOX10)
    np.testing.assert_allclose(two.project_to_free((1.5, 0.5, 0.0))[:2], (1.0, 0.5), atol=1e-9)


def test_depth_sign():
    fs = FreeSpace((unit_region(0, 0, (0.5, 0.5)),), BOX10)
    d, n = fs.depth((0.5, 0.9))
    assert d == pytest.approx(0.1)
    np.testing.assert_allclose(n, (0, -1))
    assert fs.depth((1.5, 0.5))[0] == pytest.approx(-0.5)


def test_nearest_in_polygon_corner():
    sq = ConvexPolygon.rectangle(0, 0, 1, 1)
    np.testing.assert_allclose(nearest_in_polygon(sq.A, sq.b, np.array([3.0, -2.0])), (1.0, 0.0), atol=1e-12)


def test_world_regions_exclude_obstacles():
    world = load_bundled("clutter")
    rng = np.random.default_rng(1)
    seeds = [Point2(*s) for s in ((0.6, 0.6), (3.0, 1.9), (5.4, 4.5), (1.0, 4.3))]
    fs = FreeSpace.from_seeds(world.collision_obstacles, world.bounds_poly, seeds)
    assert len(fs.regions) == 4
    for reg in fs.regions:
        assert reg.contains(reg.seed.as_array())
        c = reg.chebyshev_center.as_array()
        r = reg.chebyshev_radius
        ball = c + r * np.column_stack([np.cos(np.linspace(0, 6.28, 32)), np.sin(np.linspace(0, 6.28, 32))])
        assert all(reg.contains(p, tol=1e-7) for p in ball)
        xmin, ymin, xmax, ymax = world.bounds
        pts = rng.uniform([xmin, ymin], [xmax, ymax], size=(10_000, 2))
        pts = pts[np.all(pts @ reg.A.T - reg.b <= 0, axis=1)]
        for o in world.collision_obstacles:
            assert not np.any(np.all(pts @ o.A.T - o.b < -1e-9, axis=1))


xy = st.tuples(st.floats(0, 10), st.floats(0, 10))


@given(xy)
def test_projection_lands_in_free_space(p):
    fs = FreeSpace((grow_region([OBST], BOX10, Point2(2, 5)), grow_region([OBST], BOX10, Point2(8, 8))), BOX10)
    q = fs.project_to_free((p[0], p[1], 0.3))
    assert fs.membership(q) is not None
    assert q[2] == 0.3


@given(st.floats(0.5, 9.5), st.floats(0.5, 9.5))
def test_region_contains_seed(x, y):
    obs = [inflate(OBST, 0.3)]
    if contains(obs[0], (x, y)):
        return
    reg = grow_region(obs, BOX10, Point2(x, y))
    assert reg.contains((x, y))
