"""Convex free-space regions grown around seeds, with membership and projection.

Regions are grown IRIS-style but with an inscribed ball instead of an
ellipsoid: separating lines are taken at each obstacle's closest point to the
current Chebyshev center, and the center is recomputed until the radius
settles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog

from . import kernels
from .geometry import EPS, ConvexPolygon, Halfspace, Point2, closest_point, contains

log = logging.getLogger(__name__)

MEMBER_TOL = 1e-9


class EmptyRegionError(ValueError):
    pass


class SeedInCollisionError(ValueError):
    pass


def _stack(halfspaces: Sequence[Halfspace]) -> Tuple[np.ndarray, np.ndarray]:
    A = np.array([h.normal for h in halfspaces], dtype=float).reshape(-1, 2)
    b = np.array([h.offset for h in halfspaces], dtype=float)
    return A, b


def nearest_in_polygon(A: np.ndarray, b: np.ndarray, ref: np.ndarray, tol: float = 1e-12):
    """Exact Euclidean projection of ``ref`` onto ``{x : A x <= b}`` in the plane.

    The minimiser is either ``ref`` itself, the foot of ``ref`` on one of the
    lines, or a vertex formed by two lines; all candidates are enumerated.
    Returns None when the set is empty.
    """
    ref = np.asarray(ref, dtype=float)
    if np.all(A @ ref - b <= tol):
        return ref.copy()
    cands = [ref - (A @ ref - b)[:, None] * A]  # feet on each line (unit normals)
    m = A.shape[0]
    if m >= 2:
        i, j = np.triu_indices(m, 1)
        det = A[i, 0] * A[j, 1] - A[i, 1] * A[j, 0]
        ok = np.abs(det) > 1e-14
        i, j, det = i[ok], j[ok], det[ok]
        vx = (b[i] * A[j, 1] - b[j] * A[i, 1]) / det
        vy = (A[i, 0] * b[j] - A[j, 0] * b[i]) / det
        cands.append(np.column_stack([vx, vy]))
    C = np.vstack(cands)
    viol = (C @ A.T - b).max(axis=1)
    feas = viol <= tol * (1.0 + np.abs(C).max(axis=1))
    if not np.any(feas):
        return None
    C = C[feas]
    d2 = ((C - ref) ** 2).sum(axis=1)
    return C[int(np.argmin(d2))]


def chebyshev_center(halfspaces: Sequence[Halfspace], reference=None) -> Tuple[Point2, float]:
    """Largest inscribed disc of ``{x : a_i . x <= b_i}``.

    Solves ``max r s.t. a_i . c + r <= b_i`` as a three-variable LP. When the
    optimal center is not unique (slabs, rectangles) the one nearest to
    ``reference`` (default: the origin) is returned.
    """
    A, b = _stack(halfspaces)
    if A.shape[0] == 0:
        raise EmptyRegionError("empty region: no halfspaces")
    res = linprog(
        c=[0.0, 0.0, -1.0],
        A_ub=np.column_stack([A, np.ones(len(b))]),
        b_ub=b,
        bounds=[(None, None), (None, None), (None, None)],
        method="highs",
    )
    if res.status == 3:
        raise EmptyRegionError("unbounded region: radius is infinite")
    if res.status != 0 or -res.fun <= 0.0:
        raise EmptyRegionError("empty region")
    r_opt = -res.fun
    ref = np.zeros(2) if reference is None else np.asarray(reference, dtype=float)[:2]
    # a thin sliver of near-optimal centers; pick the one closest to the reference
    shrink = r_opt * (1.0 - 1e-9)
    c = nearest_in_polygon(A, b - shrink, ref, tol=1e-12)
    if c is None:
        c = np.asarray(res.x[:2])
    r = float(np.min(b - A @ c))
    return Point2(float(c[0]), float(c[1])), r


@dataclass(frozen=True)
class ConvexRegion:
    halfspaces: Tuple[Halfspace, ...]
    seed: Point2
    chebyshev_center: Point2
    chebyshev_radius: float
    A: np.ndarray = field(repr=False, compare=False)
    b: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def build(cls, halfspaces, seed: Point2, center: Point2, radius: float) -> "ConvexRegion":
        hs = tuple(halfspaces)
        A, b = _stack(hs)
        A.setflags(write=False)
        b.setflags(write=False)
        return cls(hs, seed, center, float(radius), A, b)

    def contains(self, pt, tol: float = MEMBER_TOL) -> bool:
        p = np.asarray(pt, dtype=float)[:2]
        return bool(np.all(self.A @ p - self.b <= tol))

    def project(self, pt) -> np.ndarray:
        p = np.asarray(pt, dtype=float)[:2]
        # aim slightly inside so the result passes the membership test exactly
        q = nearest_in_polygon(self.A, self.b - 1e-10, p, tol=0.0)
        if q is None:
            q = nearest_in_polygon(self.A, self.b, p, tol=1e-12)
        return q

    def to_json(self):
        return [{"normal": [h.normal[0], h.normal[1]], "offset": h.offset} for h in self.halfspaces]

    def vertices(self) -> np.ndarray:
        """Counter-clockwise vertex list (for rendering)."""
        A, b = self.A, self.b
        m = A.shape[0]
        pts = []
        for i in range(m):
            for j in range(i + 1, m):
                det = A[i, 0] * A[j, 1] - A[i, 1] * A[j, 0]
                if abs(det) < 1e-14:
                    continue
                v = np.array([(b[i] * A[j, 1] - b[j] * A[i, 1]) / det, (A[i, 0] * b[j] - A[j, 0] * b[i]) / det])
                if np.all(A @ v - b <= 1e-7):
                    pts.append(v)
        if not pts:
            return np.zeros((0, 2))
        P = np.unique(np.round(np.array(pts), 12), axis=0)
        c = P.mean(axis=0)
        order = np.argsort(np.arctan2(P[:, 1] - c[1], P[:, 0] - c[0]))
        return P[order]


def _separating_halfspace(obstacle: ConvexPolygon, point: np.ndarray) -> Optional[Halfspace]:
    cp, dist = closest_point(obstacle, point)
    if dist <= 0.0:
        return None
    n = (point - cp) / dist
    # region side: n . x >= n . cp  ->  (-n) . x <= -(n . cp)
    return Halfspace((float(-n[0]), float(-n[1])), float(-(n @ cp)))


def grow_region(
    obstacles_inflated: Sequence[ConvexPolygon],
    bounds: ConvexPolygon,
    seed,
    max_iters: int = 20,
    tol: float = 1e-6,
) -> ConvexRegion:
    """Grow a convex obstacle-free region around ``seed``.

    Obstacles are visited nearest-first and skipped when an earlier separating
    line already excludes them. A line that would cut off the seed is replaced
    by the one separating the obstacle from the seed itself, so the seed always
    stays inside.
    """
    s = np.asarray([seed.x, seed.y] if isinstance(seed, Point2) else seed, dtype=float)[:2]
    seed_pt = Point2(float(s[0]), float(s[1]))
    if not contains(bounds, s):
        raise SeedInCollisionError("seed outside world bounds")
    for obs in obstacles_inflated:
        if contains(obs, s, tol=0.0):
            raise SeedInCollisionError("seed in collision")

    bound_hs = bounds.halfspaces()
    center = s.copy()
    radius = None
    hs: List[Halfspace] = list(bound_hs)
    c_pt = seed_pt
    for _ in range(max_iters):
        dists = [closest_point(o, center)[1] for o in obstacles_inflated]
        order = sorted(range(len(obstacles_inflated)), key=lambda i: (dists[i], i))
        new_hs: List[Halfspace] = []
        for i in order:
            obs = obstacles_inflated[i]
            if any(np.all(obs.vertices @ np.asarray(h.normal) >= h.offset - EPS) for h in new_hs):
                continue
            h = _separating_halfspace(obs, center)
            if h is None or h.value(s) > 0.0:
                h = _separating_halfspace(obs, s)
            new_hs.append(h)
        hs = new_hs + list(bound_hs)
        c_pt, r = chebyshev_center(hs, reference=s)
        center = c_pt.as_array()
        if radius is not None and abs(r - radius) < tol:
            radius = r
            break
        radius = r
    return ConvexRegion.build(hs, seed_pt, c_pt, radius)


@dataclass(frozen=True)
class FreeSpace:
    regions: Tuple[ConvexRegion, ...]
    world_bounds: ConvexPolygon
    _packed: tuple = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if len(self.regions) == 0:
            raise ValueError("free space needs at least one region")
        object.__setattr__(self, "_packed", kernels.pack_polygons(self.regions))

    @classmethod
    def from_seeds(cls, obstacles_inflated, bounds, seeds) -> "FreeSpace":
        regions = []
        for s in seeds:
            try:
                regions.append(grow_region(obstacles_inflated, bounds, s))
            except (SeedInCollisionError, EmptyRegionError) as err:
                log.debug("skipping seed %s: %s", s, err)
        return cls(tuple(regions), bounds)

    def membership(self, config) -> Optional[int]:
        p = np.asarray(config, dtype=float)[:2]
        for i, r in enumerate(self.regions):
            if r.contains(p):
                return i
        return None

    def depth(self, config) -> Tuple[float, np.ndarray]:
        """Signed clearance to the boundary of the deepest region, and its inward normal.

        Positive inside the union. Ties go to the lower region index, then to
        the lower face index.
        """
        p = np.asarray(config, dtype=float)[:2]
        best, normal = -np.inf, None
        for r in self.regions:
            slack = r.b - r.A @ p
            j = int(np.argmin(slack))
            if slack[j] > best:
                best, normal = float(slack[j]), -r.A[j]
        return best, normal

    def membership_all(self, configs) -> np.ndarray:
        """Vectorised membership over an (N, >=2) array; -1 marks a miss."""
        pts = np.ascontiguousarray(np.asarray(configs, dtype=np.float64)[:, :2])
        A, b, starts = self._packed
        return kernels.first_region(pts, A, b, starts, MEMBER_TOL)

    def all_free(self, configs) -> bool:
        return bool(np.all(self.membership_all(configs) >= 0))

    def project_to_free(self, config) -> np.ndarray:
        c = np.array(config, dtype=float)
        if self.membership(c) is not None:
            return c
        best, best_d = None, np.inf
        for r in self.regions:
            q = r.project(c[:2])
            d = float(np.hypot(*(q - c[:2])))
            if d < best_d:  # strict: lower index wins ties
                best, best_d = q, d
        out = c.copy()
        out[:2] = best
        return out

    def to_json(self):
        return [r.to_json() for r in self.regions]
