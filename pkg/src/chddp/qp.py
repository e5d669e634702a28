"""Small convex QPs for the control update.

    minimize    0.5 x'Hx + g'x
    subject to  lower <= x <= upper
                sum(x[simplex]) == 0

The equality only ever ties together the mode-weight block, whose bounds are
``[-p, 1 - p]`` for the nominal weights ``p``; feasible steps are exactly the
ones that keep ``p + x`` on the probability simplex.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ARMIJO = 0.1
AT_BOUND = 1e-13


def project_simplex(y: np.ndarray, mass: float = 1.0) -> np.ndarray:
    """Euclidean projection onto ``{z >= 0, sum z = mass}`` by sorting."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - mass
    idx = np.arange(1, y.size + 1)
    rho = np.nonzero(u - css / idx > 0)[0][-1]
    tau = css[rho] / (rho + 1)
    return np.maximum(y - tau, 0.0)


@dataclass
class QPResult:
    x: np.ndarray
    # columns span the directions left free at the solution; clamped coordinates
    # have zero rows, the simplex pivot row carries minus the sum of its block
    basis: np.ndarray
    reduced_hessian: np.ndarray
    iterations: int
    converged: bool


def _objective(H, g, x):
    return 0.5 * x @ H @ x + g @ x


class _Feasible:
    def __init__(self, lower, upper, simplex):
        self.lower = lower
        self.upper = upper
        self.simplex = simplex
        n = lower.size
        self.box = np.ones(n, dtype=bool)
        if simplex is not None:
            self.box[simplex] = False
            self.shift = -lower[simplex]
            self.mass = float(self.shift.sum())

    def project(self, x):
        out = np.where(self.box, np.clip(x, self.lower, self.upper), x)
        if self.simplex is not None:
            out[self.simplex] = project_simplex(x[self.simplex] + self.shift, self.mass) - self.shift
        return out


def _free_basis(x, grad, fs: _Feasible):
    """Directions not blocked by active constraints."""
    n = x.size
    lo, hi = fs.lower, fs.upper
    cols = []
    for i in np.nonzero(fs.box)[0]:
        if hi[i] - lo[i] <= 0.0:
            continue
        if (x[i] <= lo[i] + AT_BOUND and grad[i] > 0.0) or (x[i] >= hi[i] - AT_BOUND and grad[i] < 0.0):
            continue
        c = np.zeros(n)
        c[i] = 1.0
        cols.append(c)
    if fs.simplex is not None:
        idx = np.arange(n)[fs.simplex]
        level = x[idx] + fs.shift
        j = idx[int(np.argmax(level))]
        for k, i in enumerate(idx):
            if i == j:
                continue
            if level[k] <= AT_BOUND and grad[i] - grad[j] > 0.0:
                continue
            c = np.zeros(n)
            c[i] = 1.0
            c[j] = -1.0
            cols.append(c)
    if not cols:
        return np.zeros((n, 0))
    return np.column_stack(cols)


def constrained_qp_step(
    H: np.ndarray,
    g: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    simplex: Optional[slice] = None,
    x0: Optional[np.ndarray] = None,
    max_iter: int = 100,
    tol: float = 1e-8,
) -> QPResult:
    """Projected-Newton active-set solve, starting from ``x0`` (default: zero).

    ``H`` must be positive definite. Zero is always feasible, and every
    accepted iterate lowers the objective, so the result is never worse than
    doing nothing.
    """
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    fs = _Feasible(lower, upper, simplex)
    x = np.zeros_like(g) if x0 is None else fs.project(np.asarray(x0, dtype=float))
    f = _objective(H, g, x)

    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        grad = H @ x + g
        E = _free_basis(x, grad, fs)
        if E.shape[1] == 0:
            converged = True
            break
        gr = E.T @ grad
        if np.linalg.norm(gr) < tol:
            converged = True
            break
        Hr = E.T @ H @ E
        try:
            L = np.linalg.cholesky(Hr)
            z = -np.linalg.solve(L.T, np.linalg.solve(L, gr))
        except np.linalg.LinAlgError:
            z = -gr
        directions = [E @ z, -(E @ gr)]
        stepped = False
        for d in directions:
            alpha = 1.0
            while alpha > 1e-12:
                x_new = fs.project(x + alpha * d)
                f_new = _objective(H, g, x_new)
                decrease = grad @ (x - x_new)
                if decrease > 0.0 and f - f_new >= ARMIJO * decrease:
                    stepped = True
                    break
                alpha *= 0.5
            if stepped:
                break
        if not stepped:
            break
        step = np.linalg.norm(x_new - x)
        x, f = x_new, f_new
        if step < 1e-15:
            break

    grad = H @ x + g
    E = _free_basis(x, grad, fs)
    Hr = E.T @ H @ E
    return QPResult(x=x, basis=E, reduced_hessian=Hr, iterations=it, converged=converged)
