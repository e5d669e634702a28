"""Cost terms for the hybrid problem: soft-abs tracking, mode switching, goal."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from .ddp import CostSchedule, Trajectory
from .kernels import wrap


def pseudo_huber(z, alpha: float = 1.0) -> float:
    """``alpha^2 (sqrt(1 + (z/alpha)^2) - 1)``, summed over components."""
    if alpha <= 0:
        raise ValueError("pseudo-Huber scale must be positive")
    z = np.asarray(z, dtype=float) / alpha
    # sqrt(1+z^2) - 1 == z^2 / (sqrt(1+z^2) + 1), without cancellation near 0
    return float(np.sum(alpha * alpha * z * z / (np.sqrt(1.0 + z * z) + 1.0)))


def pseudo_huber_derivs(z, alpha: float = 1.0):
    """Elementwise value, first and second derivative."""
    z = np.asarray(z, dtype=float)
    s = z / alpha
    root = np.sqrt(1.0 + s * s)
    val = alpha * alpha * s * s / (root + 1.0)
    return val, z / root, 1.0 / root**3


def _switch_args(p, p_th):
    p = np.asarray(p, dtype=float)
    low = p < p_th
    scale = 1.0 / (p_th * (1.0 - p_th))
    z = np.where(low, p, (1.0 - p) * scale)
    dz = np.where(low, 1.0, -scale)
    return z, dz


def switching_cost(p, c_st: float, p_th: Optional[float] = None) -> float:
    """Penalty pushing every mode weight to 0 or 1; zero exactly on one-hot vectors."""
    p = np.asarray(p, dtype=float)
    if p_th is None:
        p_th = 1.0 / p.size
    z, _ = _switch_args(p, p_th)
    return c_st * pseudo_huber(z, 1.0)


def switching_derivs(p, c_st: float, p_th: float):
    z, dz = _switch_args(p, p_th)
    val, d1, d2 = pseudo_huber_derivs(z, 1.0)
    return c_st * float(val.sum()), c_st * d1 * dz, c_st * d2 * dz * dz


class SwitchSchedule(CostSchedule):
    """Switching coefficient that grows geometrically per accepted iteration."""

    def __init__(self, c0: float = 0.1, growth: float = 1.2, c_max: float = 1e3):
        if c0 <= 0 or growth <= 1.0 or c_max < c0:
            raise ValueError("need c0 > 0, growth > 1 and c_max >= c0")
        self.c0 = float(c0)
        self.growth = float(growth)
        self.c_max = float(c_max)
        self.value = self.c0

    @property
    def done(self) -> bool:
        return self.value >= self.c_max

    def advance(self) -> bool:
        if self.done:
            return False
        self.value = min(self.value * self.growth, self.c_max)
        return True


class _FixedSwitch:
    def __init__(self, value):
        self.value = float(value)


class HybridCostBase:
    """Running cost ``w_u |u|^2 + c_ST(p)`` shared by both stages."""

    def __init__(self, m: int, n_modes: int, w_u: float, switch):
        self.m = m
        self.n_modes = n_modes
        self.w_u = float(w_u)
        self.switch = switch
        self.p_th = 1.0 / n_modes

    @property
    def c_st(self) -> float:
        return self.switch.value

    def state_running(self, x, t):
        """(value, gradient, Hessian) of the state-dependent running term."""
        n = len(x)
        return 0.0, np.zeros(n), np.zeros((n, n))

    def running(self, x, u, t):
        m = self.m
        val = self.state_running(x, t)[0]
        val += self.w_u * float(u[:m] @ u[:m])
        val += switching_cost(u[m:], self.c_st, self.p_th)
        return val

    def running_derivs(self, x, u, t):
        m, nu = self.m, len(u)
        sv, lx, lxx = self.state_running(x, t)
        cv, cg, ch = switching_derivs(u[m:], self.c_st, self.p_th)
        lu = np.zeros(nu)
        luu = np.zeros((nu, nu))
        lu[:m] = 2.0 * self.w_u * u[:m]
        luu[:m, :m] = 2.0 * self.w_u * np.eye(m)
        lu[m:] = cg
        luu[m:, m:] = np.diag(ch)
        val = sv + self.w_u * float(u[:m] @ u[:m]) + cv
        return val, lx, lu, lxx, luu, np.zeros((nu, len(x)))

    def breakdown(self, traj: Trajectory) -> Dict[str, float]:
        m = self.m
        control = float(self.w_u * np.sum(traj.us[:, :m] ** 2))
        switching = float(sum(switching_cost(u[m:], self.c_st, self.p_th) for u in traj.us))
        state = float(sum(self.state_running(x, t)[0] for t, x in enumerate(traj.xs[:-1])))
        terminal = float(self.final(traj.xs[-1]))
        return {"control": control, "switching": switching, "state": state, "terminal": terminal,
                "total": control + switching + state + terminal}


def _wrapped(d):
    d = np.array(d, dtype=float)
    d[2] = wrap(d[2])
    return d


class TrackingCost(HybridCostBase):
    """Stay close to a reference: soft-abs on the state error at every step."""

    def __init__(self, reference, m, n_modes, switch, alpha_h=0.1, w_u=0.1):
        super().__init__(m, n_modes, w_u, switch)
        self.reference = np.asarray(reference, dtype=float)
        if alpha_h <= 0:
            raise ValueError("alpha_h must be positive")
        self.alpha_h = float(alpha_h)

    def _track(self, x, t):
        e = _wrapped(np.asarray(x, dtype=float) - self.reference[t])
        val, d1, d2 = pseudo_huber_derivs(e, self.alpha_h)
        return float(val.sum()), d1, np.diag(d2)

    def state_running(self, x, t):
        return self._track(x, t)

    def final(self, x):
        return self._track(x, len(self.reference) - 1)[0]

    def final_derivs(self, x):
        return self._track(x, len(self.reference) - 1)


class GoalCost(HybridCostBase):
    """Effort plus switching while running; weighted squared distance to the goal at the end."""

    def __init__(self, goal, m, n_modes, switch, w_u=0.1, w_pos=200.0, w_theta=50.0):
        super().__init__(m, n_modes, w_u, switch)
        self.goal = np.asarray(goal, dtype=float)
        self.W = np.diag([w_pos, w_pos, w_theta])

    def final(self, x):
        e = _wrapped(np.asarray(x, dtype=float) - self.goal)
        return float(0.5 * e @ self.W @ e)

    def final_derivs(self, x):
        e = _wrapped(np.asarray(x, dtype=float) - self.goal)
        return float(0.5 * e @ self.W @ e), self.W @ e, self.W.copy()


def goal_cost_for(model, goal, c_st, w_u=0.1, w_pos=200.0, w_theta=50.0) -> GoalCost:
    """The objective used to score final trajectories (CHDDP and KDRRT alike)."""
    return GoalCost(goal, model.m, model.n_modes, _FixedSwitch(c_st), w_u=w_u, w_pos=w_pos, w_theta=w_theta)


def mode_sequence(us, m: int) -> np.ndarray:
    return np.argmax(np.asarray(us)[:, m:], axis=1)


def count_switches(modes) -> int:
    modes = np.asarray(modes)
    return int(np.count_nonzero(modes[1:] != modes[:-1]))


def wrapped_error(x, goal):
    e = _wrapped(np.asarray(x, dtype=float) - np.asarray(goal, dtype=float))
    return math.hypot(e[0], e[1]), abs(e[2])
