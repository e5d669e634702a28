"""Planar primitives: convex polygons, halfspaces and the queries the planners need."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

# Interior tests use this slack so that grazing contact never counts as overlap.
EPS = 1e-9


@dataclass(frozen=True)
class Point2:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite point ({self.x}, {self.y})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y], dtype=float)


@dataclass(frozen=True)
class Halfspace:
    """The set ``{x : normal . x <= offset}`` with a unit normal."""

    normal: Tuple[float, float]
    offset: float

    def __post_init__(self):
        n = math.hypot(*self.normal)
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"halfspace normal must be unit length, got |a|={n}")

    @classmethod
    def from_raw(cls, a: Sequence[float], b: float) -> "Halfspace":
        n = math.hypot(a[0], a[1])
        if n == 0.0:
            raise ValueError("degenerate halfspace normal")
        return cls((float(a[0]) / n, float(a[1]) / n), float(b) / n)

    def value(self, pt) -> float:
        p = _xy(pt)
        return self.normal[0] * p[0] + self.normal[1] * p[1] - self.offset


def _xy(pt) -> np.ndarray:
    if isinstance(pt, Point2):
        return pt.as_array()
    return np.asarray(pt, dtype=float)[:2]


class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices.

    Vertices are validated on construction; clockwise input is rejected rather
    than silently reversed so that world files stay unambiguous.
    """

    __slots__ = ("vertices", "_A", "_b")

    def __init__(self, vertices):
        v = np.array([_xy(p) for p in vertices], dtype=float)
        if v.ndim != 2 or v.shape[0] < 3:
            raise ValueError("polygon needs at least 3 vertices")
        if not np.all(np.isfinite(v)):
            raise ValueError("polygon vertices must be finite")
        edges = np.roll(v, -1, axis=0) - v
        if np.any(np.hypot(edges[:, 0], edges[:, 1]) == 0.0):
            raise ValueError("polygon has repeated vertices")
        nxt = np.roll(edges, -1, axis=0)
        cross = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
        if np.any(cross <= 0.0):
            raise ValueError("obstacle not convex (or not counter-clockwise)")
        self.vertices = v
        self.vertices.setflags(write=False)
        # outward normals of CCW edges: (dy, -dx)
        normals = np.column_stack([edges[:, 1], -edges[:, 0]])
        normals /= np.hypot(normals[:, 0], normals[:, 1])[:, None]
        self._A = normals
        self._b = np.einsum("ij,ij->i", normals, v)
        self._A.setflags(write=False)
        self._b.setflags(write=False)

    @classmethod
    def rectangle(cls, xmin: float, ymin: float, xmax: float, ymax: float) -> "ConvexPolygon":
        return cls([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])

    @property
    def A(self) -> np.ndarray:
        return self._A

    @property
    def b(self) -> np.ndarray:
        return self._b

    def halfspaces(self) -> List[Halfspace]:
        return [Halfspace((float(a[0]), float(a[1])), float(b)) for a, b in zip(self._A, self._b)]

    def centroid(self) -> np.ndarray:
        """Area centroid (shoelace)."""
        v = self.vertices
        w = np.roll(v, -1, axis=0)
        cr = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
        area = cr.sum() / 2.0
        cx = ((v[:, 0] + w[:, 0]) * cr).sum() / (6.0 * area)
        cy = ((v[:, 1] + w[:, 1]) * cr).sum() / (6.0 * area)
        return np.array([cx, cy])

    def bounds(self) -> Tuple[float, float, float, float]:
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])

    def __len__(self):
        return self.vertices.shape[0]

    def __eq__(self, other):
        return isinstance(other, ConvexPolygon) and np.array_equal(self.vertices, other.vertices)

    def __hash__(self):
        return hash(self.vertices.tobytes())

    def __repr__(self):
        return f"ConvexPolygon({self.vertices.tolist()})"


def contains(poly: ConvexPolygon, pt, tol: float = EPS) -> bool:
    """Boundary points count as inside."""
    p = _xy(pt)
    return bool(np.all(poly.A @ p - poly.b <= tol))


def closest_point(poly: ConvexPolygon, pt) -> Tuple[np.ndarray, float]:
    """Nearest point of the (filled) polygon to ``pt`` and the distance to it."""
    p = _xy(pt)
    if np.all(poly.A @ p - poly.b <= 0.0):
        return p.copy(), 0.0
    v = poly.vertices
    w = np.roll(v, -1, axis=0)
    d = w - v
    t = np.einsum("ij,ij->i", p - v, d) / np.einsum("ij,ij->i", d, d)
    t = np.clip(t, 0.0, 1.0)
    cand = v + t[:, None] * d
    dist = np.hypot(cand[:, 0] - p[0], cand[:, 1] - p[1])
    i = int(np.argmin(dist))
    return cand[i], float(dist[i])


def inflate(poly: ConvexPolygon, margin: float) -> ConvexPolygon:
    """Offset every edge outward by ``margin`` (miter joins).

    The result contains the Minkowski sum with a disc of radius ``margin``;
    corners overshoot by ``margin / cos(half exterior angle)``.
    """
    if margin < 0:
        raise ValueError(f"inflation margin must be non-negative, got {margin}")
    if margin == 0:
        return poly
    A = poly.A
    b = poly.b + margin
    n = A.shape[0]
    verts = []
    for i in range(n):
        # vertex i sits between edge i-1 and edge i
        a1, b1 = A[i - 1], b[i - 1]
        a2, b2 = A[i], b[i]
        M = np.array([a1, a2])
        verts.append(np.linalg.solve(M, np.array([b1, b2])))
    return ConvexPolygon(verts)


def segment_intersects(poly: ConvexPolygon, p, q, tol: float = EPS) -> bool:
    """True iff the open segment pq passes through the interior of ``poly``.

    Touching an edge or a vertex is not an intersection.
    """
    p = _xy(p)
    q = _xy(q)
    d = q - p
    lo, hi = 0.0, 1.0
    num = poly.b - tol - poly.A @ p  # need A(p + t d) < b - tol
    den = poly.A @ d
    for nu, de in zip(num, den):
        if de == 0.0:
            if nu <= 0.0:
                return False
        elif de > 0.0:
            hi = min(hi, nu / de)
        else:
            lo = max(lo, nu / de)
        if lo >= hi:
            return False
    return bool(hi > lo)


def wrap_angle(theta):
    """Wrap to (-pi, pi]."""
    theta = np.asarray(theta, dtype=float)
    w = np.mod(theta + np.pi, 2.0 * np.pi) - np.pi
    w = np.where(w == -np.pi, np.pi, w)
    w = np.where((theta > -np.pi) & (theta <= np.pi), theta, w)
    if np.ndim(w) == 0:
        return float(w)
    return w
