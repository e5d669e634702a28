# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; same contract as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fmod, M_PI, INFINITY

cnp.import_array()

cdef double TWO_PI = 2.0 * M_PI


cdef inline double _wrap(double a) nogil:
    if -M_PI < a <= M_PI:
        return a
    a = fmod(a + M_PI, TWO_PI)
    if a < 0.0:
        a += TWO_PI
    a -= M_PI
    if a <= -M_PI:
        a = M_PI
    return a


def wrap(double a):
    return _wrap(a)


def propagate_box(double x, double y, double th, double v, double psi, long mode,
                  double c_omega, double dt, long steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps, 3))
    cdef double off = mode * (M_PI / 2.0) + psi
    cdef double dth = dt * c_omega * v * sin(psi)
    cdef double ang
    cdef long i
    for i in range(steps):
        ang = th + off
        x = x + dt * v * cos(ang)
        y = y + dt * v * sin(ang)
        th = _wrap(th + dth)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = th
    return out


def propagate_dubins(double x, double y, double th, double omega, double speed,
                     double dt, long steps):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.empty((steps, 3))
    cdef long i
    for i in range(steps):
        x = x + dt * speed * cos(th)
        y = y + dt * speed * sin(th)
        th = _wrap(th + dt * omega)
        out[i, 0] = x
        out[i, 1] = y
        out[i, 2] = th
    return out


def nearest_weighted(double[:, ::1] nodes, long count, double qx, double qy,
                     double qth, double w_theta):
    cdef long best = -1
    cdef double best_d = INFINITY
    cdef double dx, dy, dt, d
    cdef long i
    for i in range(count):
        dx = nodes[i, 0] - qx
        dy = nodes[i, 1] - qy
        dt = _wrap(nodes[i, 2] - qth)
        d = dx * dx + dy * dy + w_theta * dt * dt
        if d < best_d:
            best_d = d
            best = i
    return best


cdef inline bint _inside(double px, double py, double[:, ::1] A, double[::1] b,
                         long r0, long r1, double tol) nogil:
    cdef long r
    for r in range(r0, r1):
        if A[r, 0] * px + A[r, 1] * py - b[r] > tol:
            return False
    return True


def any_point_in_polygons(double[:, ::1] pts, double[:, ::1] A, double[::1] b,
                          long[::1] starts, double tol):
    cdef long npoly = starts.shape[0] - 1
    cdef long k, j
    for k in range(pts.shape[0]):
        for j in range(npoly):
            if _inside(pts[k, 0], pts[k, 1], A, b, starts[j], starts[j + 1], tol):
                return True
    return False


def first_region(double[:, ::1] pts, double[:, ::1] A, double[::1] b,
                 long[::1] starts, double tol):
    cdef long npoly = starts.shape[0] - 1
    cdef cnp.ndarray[cnp.int64_t, ndim=1] out = np.full(pts.shape[0], -1, dtype=np.int64)
    cdef long k, j
    for k in range(pts.shape[0]):
        for j in range(npoly):
            if _inside(pts[k, 0], pts[k, 1], A, b, starts[j], starts[j + 1], tol):
                out[k] = j
                break
    return out
