"""Pure-Python kernels. Reference semantics for the compiled ``_kernels`` module.

Both implementations must agree to rounding; ``tests/test_kernels.py`` checks
them against each other when the extension is built.
"""

import math

import numpy as np

TWO_PI = 2.0 * math.pi


def wrap(a):
    if -math.pi < a <= math.pi:
        return a
    a = math.fmod(a + math.pi, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    a -= math.pi
    if a <= -math.pi:
        a = math.pi
    return a


def propagate_box(x, y, th, v, psi, mode, c_omega, dt, steps):
    """Hold (v, psi) in push mode ``mode`` for ``steps`` steps; returns (steps, 3)."""
    out = np.empty((steps, 3))
    off = mode * (math.pi / 2.0) + psi
    dth = dt * c_omega * v * math.sin(psi)
    for i in range(steps):
        ang = th + off
        x = x + dt * v * math.cos(ang)
        y = y + dt * v * math.sin(ang)
        th = wrap(th + dth)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = th
    return out


def propagate_dubins(x, y, th, omega, speed, dt, steps):
    out = np.empty((steps, 3))
    for i in range(steps):
        x = x + dt * speed * math.cos(th)
        y = y + dt * speed * math.sin(th)
        th = wrap(th + dt * omega)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = th
    return out


def nearest_weighted(nodes, count, qx, qy, qth, w_theta):
    """Index of the node minimising dx^2 + dy^2 + w_theta * wrap(dth)^2 (first on ties)."""
    best = -1
    best_d = math.inf
    for i in range(count):
        dx = nodes[i, 0] - qx
        dy = nodes[i, 1] - qy
        dt = wrap(nodes[i, 2] - qth)
        d = dx * dx + dy * dy + w_theta * dt * dt
        if d < best_d:
            best_d = d
            best = i
    return best


def any_point_in_polygons(pts, A, b, starts, tol):
    """True if some point satisfies every halfspace of some polygon (within ``tol``).

    Polygon ``j`` owns rows ``starts[j]:starts[j+1]`` of ``A``/``b``.
    """
    npoly = starts.shape[0] - 1
    for k in range(pts.shape[0]):
        px = pts[k, 0]
        py = pts[k, 1]
        for j in range(npoly):
            inside = True
            for r in range(starts[j], starts[j + 1]):
                if A[r, 0] * px + A[r, 1] * py - b[r] > tol:
                    inside = False
                    break
            if inside:
                return True
    return False


def first_region(pts, A, b, starts, tol):
    """Per point, index of the first polygon containing it, or -1."""
    npoly = starts.shape[0] - 1
    out = np.full(pts.shape[0], -1, dtype=np.int64)
    for k in range(pts.shape[0]):
        px = pts[k, 0]
        py = pts[k, 1]
        for j in range(npoly):
            inside = True
            for r in range(starts[j], starts[j + 1]):
                if A[r, 0] * px + A[r, 1] * py - b[r] > tol:
                    inside = False
                    break
            if inside:
                out[k] = j
                break
    return out
