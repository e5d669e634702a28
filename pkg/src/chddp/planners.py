"""Geometric initialisation and the sampling-based baseline.

* visibility graphs over inflated obstacles, with paths grouped into homotopy
  classes by ray-crossing words (one upward ray per obstacle);
* a kinodynamic RRT that grows a tree by holding random modes and controls.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np

from . import kernels
from .ddp import Trajectory
from .geometry import ConvexPolygon, contains, segment_intersects


class PlanningError(RuntimeError):
    pass


@dataclass
class VisibilityGraph:
    nodes: np.ndarray  # (N, 2); node 0 is the start, node 1 the goal
    graph: nx.Graph

    @property
    def edges(self):
        return {(min(u, v), max(u, v)): d["weight"] for u, v, d in self.graph.edges(data=True)}


def _in_collision(obstacles, pt) -> bool:
    return any(contains(o, pt) for o in obstacles)


def build_visibility_graph(obstacles_inflated: Sequence[ConvexPolygon], bounds: Optional[ConvexPolygon],
                           start, goal) -> VisibilityGraph:
    s = np.asarray(start, dtype=float)[:2]
    g = np.asarray(goal, dtype=float)[:2]
    if _in_collision(obstacles_inflated, s):
        raise PlanningError("start in collision")
    if _in_collision(obstacles_inflated, g):
        raise PlanningError("goal in collision")
    pts = [s, g] + [v for o in obstacles_inflated for v in o.vertices]
    nodes = np.array(pts, dtype=float)
    G = nx.Graph()
    G.add_nodes_from(range(len(nodes)))
    usable = [bounds is None or contains(bounds, p) for p in nodes]
    for i, j in itertools.combinations(range(len(nodes)), 2):
        if not (usable[i] and usable[j]):
            continue
        p, q = nodes[i], nodes[j]
        w = float(np.hypot(*(q - p)))
        if w == 0.0:
            continue
        if any(segment_intersects(o, p, q) for o in obstacles_inflated):
            continue
        G.add_edge(i, j, weight=w)
    return VisibilityGraph(nodes, G)


def h_signature(path, obstacles: Sequence[ConvexPolygon]) -> Tuple[int, ...]:
    """Reduced word of signed crossings of upward rays from obstacle centroids.

    Letter ``+(i+1)`` is a left-to-right crossing of obstacle ``i``'s ray,
    ``-(i+1)`` right-to-left; adjacent inverse letters cancel.
    """
    path = np.asarray(path, dtype=float)
    cents = [o.centroid() for o in obstacles]
    word: List[int] = []
    for p, q in zip(path[:-1], path[1:]):
        hits = []
        for i, (cx, cy) in enumerate(cents):
            if p[0] < cx <= q[0]:
                sign = 1
            elif q[0] < cx <= p[0]:
                sign = -1
            else:
                continue
            t = (cx - p[0]) / (q[0] - p[0])
            if p[1] + t * (q[1] - p[1]) > cy:
                hits.append((t, sign * (i + 1)))
        for _, letter in sorted(hits):
            if word and word[-1] == -letter:
                word.pop()
            else:
                word.append(letter)
    return tuple(word)


@dataclass
class GeometricPath:
    points: np.ndarray
    length: float
    signature: Tuple[int, ...]
    nodes: Tuple[int, ...] = ()


def polyline_length(points) -> float:
    points = np.asarray(points, dtype=float)
    return float(np.sum(np.hypot(*np.diff(points[:, :2], axis=0).T)))


def homotopy_paths(graph: VisibilityGraph, obstacles: Sequence[ConvexPolygon], k: int = 3) -> List[GeometricPath]:
    """Shortest path of each of up to ``k`` homotopy classes, shortest first.

    Candidates come from Yen's k-shortest simple paths; at most ``50 k`` are
    examined.
    """
    if not nx.has_path(graph.graph, 0, 1):
        raise PlanningError("disconnected: no path from start to goal")
    out: List[GeometricPath] = []
    seen = set()
    gen = nx.shortest_simple_paths(graph.graph, 0, 1, weight="weight")
    for node_path in itertools.islice(gen, 50 * k):
        pts = graph.nodes[list(node_path)]
        sig = h_signature(pts, obstacles)
        if sig in seen:
            continue
        seen.add(sig)
        out.append(GeometricPath(pts, polyline_length(pts), sig, tuple(node_path)))
        if len(out) >= k:
            break
    return out


@dataclass
class KdrrtOptions:
    max_iters: int = 50_000
    goal_bias: float = 0.1
    hold_steps: int = 5
    goal_tol_pos: float = 0.3
    goal_tol_theta: float = 0.5
    theta_weight: float = 0.5
    rng_seed: int = 0


@dataclass
class KdrrtResult:
    traj: Trajectory
    modes: np.ndarray
    iterations: int
    tree_states: np.ndarray
    parents: np.ndarray
    node_modes: np.ndarray
    node_controls: np.ndarray


def kdrrt(obstacles_inflated: Sequence[ConvexPolygon], bounds: ConvexPolygon, model, start, goal,
          opts: Optional[KdrrtOptions] = None) -> KdrrtResult:
    """Kinodynamic RRT with uniformly sampled modes and controls.

    Returns the first root-to-node trajectory that ends within the goal
    tolerance, with one-hot mode weights per step.
    """
    opts = opts or KdrrtOptions()
    rng = np.random.default_rng(opts.rng_seed)
    start = np.asarray(start, dtype=float)
    goal = np.asarray(goal, dtype=float)
    if _in_collision(obstacles_inflated, start):
        raise PlanningError("start in collision")

    A, b, starts = kernels.pack_polygons(obstacles_inflated)
    BA, Bb, Bs = kernels.pack_polygons([bounds])
    xmin, ymin, xmax, ymax = bounds.bounds()
    lo, hi = model.spec.u_lower, model.spec.u_upper
    na, h = model.n_modes, opts.hold_steps

    cap = opts.max_iters + 1
    states = np.zeros((cap, 3))
    parents = np.full(cap, -1, dtype=np.int64)
    modes = np.full(cap, -1, dtype=np.int64)
    controls = np.zeros((cap, model.m))
    segments = [None] * cap
    states[0] = start
    count = 1

    for it in range(1, opts.max_iters + 1):
        if rng.random() < opts.goal_bias:
            q = goal
        else:
            q = np.array([rng.uniform(xmin, xmax), rng.uniform(ymin, ymax), rng.uniform(-math.pi, math.pi)])
        near = kernels.nearest_weighted(states, count, float(q[0]), float(q[1]), float(q[2]), opts.theta_weight)
        a = int(rng.integers(na))
        u = rng.uniform(lo, hi)
        seg = model.propagate(states[near], u, a, h)
        pts = np.ascontiguousarray(seg[:, :2])
        if kernels.any_point_in_polygons(pts, A, b, starts, 0.0):
            continue
        if np.any(kernels.first_region(pts, BA, Bb, Bs, 0.0) < 0):
            continue
        states[count] = seg[-1]
        parents[count] = near
        modes[count] = a
        controls[count] = u
        segments[count] = seg
        count += 1
        e = seg[-1] - goal
        if math.hypot(e[0], e[1]) <= opts.goal_tol_pos and abs(kernels.wrap(e[2])) <= opts.goal_tol_theta:
            traj, mseq = _extract(count - 1, parents, modes, controls, segments, start, model, h)
            return KdrrtResult(traj, mseq, it, states[:count].copy(), parents[:count].copy(),
                               modes[:count].copy(), controls[:count].copy())
    raise PlanningError(f"not found: KDRRT exhausted {opts.max_iters} iterations")


def _extract(node, parents, modes, controls, segments, start, model, h):
    chain = []
    while node > 0:
        chain.append(node)
        node = parents[node]
    chain.reverse()
    xs = [np.asarray(start, dtype=float)]
    us, mseq = [], []
    for c in chain:
        xs.extend(segments[c])
        p = np.zeros(model.n_modes)
        p[modes[c]] = 1.0
        uh = np.concatenate([controls[c], p])
        us.extend([uh] * h)
        mseq.extend([modes[c]] * h)
    if not us:
        us = np.zeros((0, model.nu))
    return Trajectory(np.array(xs), np.array(us)), np.array(mseq, dtype=np.int64)
