"""Control-limited differential dynamic programming.

The solver works on any dynamics object providing::

    n, nu                 state / control sizes
    lower, upper          control bounds (arrays of length nu)
    simplex               slice of controls that must stay on the probability
                          simplex, or None
    frozen                control indices the solver must not change
    step(x, u)            next state
    jacobians(x, u)       (A, B)
    diff(x, y)            state difference (handles angle wrapping)

and any cost object providing ``running_derivs(x, u, t)``,
``final_derivs(x)`` (value plus gradient/Hessian blocks) and the cheaper
``running(x, u, t)`` / ``final(x)``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .qp import constrained_qp_step, project_simplex

log = logging.getLogger(__name__)


class NotPositiveDefinite(ArithmeticError):
    """Q_uu stayed indefinite after regularization; increase mu."""


class RolloutDiverged(ArithmeticError):
    """A forward rollout produced a non-finite state."""


@dataclass
class Trajectory:
    xs: np.ndarray  # (T+1, n)
    us: np.ndarray  # (T, nu)

    def __post_init__(self):
        self.xs = np.asarray(self.xs, dtype=float)
        self.us = np.asarray(self.us, dtype=float)
        if self.xs.shape[0] != self.us.shape[0] + 1:
            raise ValueError(f"need T+1 states for T controls, got {self.xs.shape[0]} and {self.us.shape[0]}")

    @property
    def T(self) -> int:
        return self.us.shape[0]

    def copy(self) -> "Trajectory":
        return Trajectory(self.xs.copy(), self.us.copy())


@dataclass
class FeedbackPolicy:
    k: np.ndarray  # (T, nu)
    K: np.ndarray  # (T, nu, n)
    dV: np.ndarray  # expected change = alpha * dV[0] + alpha**2 * dV[1]

    def expected_change(self, alpha: float) -> float:
        return alpha * self.dV[0] + alpha * alpha * self.dV[1]


@dataclass
class SolverOptions:
    max_iters: int = 500
    tol: float = 1e-7
    mu_init: float = 1e-6
    mu_min: float = 1e-8
    mu_max: float = 1e10
    alpha_min: float = 1e-4
    accept_ratio: float = 0.1


@dataclass
class SolveStats:
    iterations: int = 0
    accepted: int = 0
    cost_trace: List[float] = field(default_factory=list)
    # (cost before, cost after) of each accepted step, under the cost in force at the time
    steps: List[tuple] = field(default_factory=list)
    alphas: List[float] = field(default_factory=list)
    infeasible_rejections: int = 0
    converged: bool = False
    reason: str = ""
    mu: float = 0.0


@dataclass
class SolveResult:
    traj: Trajectory
    policy: FeedbackPolicy
    stats: SolveStats
    cost: float


def rollout(dyn, x0, us) -> Trajectory:
    us = np.asarray(us, dtype=float)
    xs = np.empty((us.shape[0] + 1, dyn.n))
    xs[0] = x0
    for t in range(us.shape[0]):
        xs[t + 1] = dyn.step(xs[t], us[t])
    return Trajectory(xs, us.copy())


def dynamics_defect(dyn, traj: Trajectory) -> float:
    """Largest per-step mismatch ``|x_{t+1} - f(x_t, u_t)|_inf``."""
    worst = 0.0
    for t in range(traj.T):
        d = dyn.diff(traj.xs[t + 1], dyn.step(traj.xs[t], traj.us[t]))
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


def total_cost(traj: Trajectory, cost) -> float:
    c = cost.final(traj.xs[-1])
    for t in range(traj.T):
        c += cost.running(traj.xs[t], traj.us[t], t)
    return float(c)


def _sym(M):
    return 0.5 * (M + M.T)


def backward_pass(traj: Trajectory, dyn, cost, mu: float) -> FeedbackPolicy:
    """Gauss-Newton value recursion with a constrained QP at every step."""
    T, n, nu = traj.T, dyn.n, dyn.nu
    k = np.zeros((T, nu))
    K = np.zeros((T, nu, n))
    dV = np.zeros(2)

    lower_all = np.asarray(dyn.lower, dtype=float)
    upper_all = np.asarray(dyn.upper, dtype=float)
    frozen = list(getattr(dyn, "frozen", ()))
    simplex = getattr(dyn, "simplex", None)
    if simplex is not None and frozen and any(i in frozen for i in range(nu)[simplex]):
        simplex = None

    _, Vx, Vxx = cost.final_derivs(traj.xs[-1])
    for t in range(T - 1, -1, -1):
        x, u = traj.xs[t], traj.us[t]
        A, B = dyn.jacobians(x, u)
        _, lx, lu, lxx, luu, lux = cost.running_derivs(x, u, t)
        Qx = lx + A.T @ Vx
        Qu = lu + B.T @ Vx
        Qxx = _sym(lxx + A.T @ Vxx @ A)
        Quu = _sym(luu + B.T @ Vxx @ B)
        Qux = lux + B.T @ Vxx @ A
        Quu_reg = Quu + mu * np.eye(nu)
        try:
            np.linalg.cholesky(Quu_reg)
        except np.linalg.LinAlgError:
            raise NotPositiveDefinite(f"Q_uu not positive definite at t={t} (mu={mu:g})") from None

        lo = lower_all - u
        hi = upper_all - u
        if frozen:
            lo[frozen] = 0.0
            hi[frozen] = 0.0
        qp = constrained_qp_step(Quu_reg, Qu, lo, hi, simplex=simplex)
        kt = qp.x
        E = qp.basis
        if E.shape[1]:
            Kt = -E @ np.linalg.solve(qp.reduced_hessian, E.T @ Qux)
        else:
            Kt = np.zeros((nu, n))
        k[t], K[t] = kt, Kt

        dV[0] += kt @ Qu
        dV[1] += 0.5 * kt @ Quu @ kt
        Vx = Qx + Kt.T @ Quu @ kt + Kt.T @ Qu + Qux.T @ kt
        Vxx = _sym(Qxx + Kt.T @ Quu @ Kt + Kt.T @ Qux + Qux.T @ Kt)
    return FeedbackPolicy(k, K, dV)


def forward_pass(traj: Trajectory, dyn, cost, policy: FeedbackPolicy, alpha: float):
    """Roll out ``u = u_bar + alpha k + K (x - x_bar)`` with controls kept feasible."""
    T = traj.T
    xs = np.empty_like(traj.xs)
    us = np.empty_like(traj.us)
    xs[0] = traj.xs[0]
    lower = np.asarray(dyn.lower, dtype=float)
    upper = np.asarray(dyn.upper, dtype=float)
    simplex = getattr(dyn, "simplex", None)
    frozen = list(getattr(dyn, "frozen", ()))
    box = np.ones(dyn.nu, dtype=bool)
    if simplex is not None:
        box[simplex] = False
    total = 0.0
    for t in range(T):
        dx = dyn.diff(xs[t], traj.xs[t])
        u = traj.us[t] + alpha * policy.k[t] + policy.K[t] @ dx
        u[box] = np.clip(u[box], lower[box], upper[box])
        if simplex is not None:
            u[simplex] = project_simplex(u[simplex])
        if frozen:
            u[frozen] = traj.us[t][frozen]
        us[t] = u
        total += cost.running(xs[t], u, t)
        xs[t + 1] = dyn.step(xs[t], u)
        if not np.all(np.isfinite(xs[t + 1])):
            raise RolloutDiverged(f"rollout diverged at t={t + 1}")
    total += cost.final(xs[-1])
    return Trajectory(xs, us), float(total)


class CostSchedule:
    """Hook for costs that change during a solve (e.g. a growing penalty)."""

    @property
    def done(self) -> bool:
        return True

    def advance(self) -> bool:
        """Called after each accepted iteration; return True if the cost changed."""
        return False


def solve(
    x0,
    initial: Trajectory,
    dyn,
    cost,
    options: Optional[SolverOptions] = None,
    schedule: Optional[CostSchedule] = None,
    feasible: Optional[Callable[[np.ndarray], bool]] = None,
    callback: Optional[Callable[[Trajectory], None]] = None,
) -> SolveResult:
    """Iterate backward/forward passes with a backtracking line search.

    ``feasible(xs)`` (optional) rejects rollouts; the step is halved until it
    passes, exactly like a failed sufficient-decrease test. ``callback`` is
    called with every accepted iterate.
    """
    opt = options or SolverOptions()
    x0 = np.asarray(x0, dtype=float)
    traj = initial
    if not np.array_equal(traj.xs[0], x0) or dynamics_defect(dyn, traj) > 1e-9:
        traj = rollout(dyn, x0, traj.us)
    cost_cur = total_cost(traj, cost)
    if not math.isfinite(cost_cur):
        raise RolloutDiverged("initial trajectory has non-finite cost")

    stats = SolveStats(cost_trace=[cost_cur])
    mu = opt.mu_init
    policy = None
    for it in range(opt.max_iters):
        stats.iterations = it + 1
        try:
            policy = backward_pass(traj, dyn, cost, mu)
        except NotPositiveDefinite:
            mu = max(2.0 * mu, 1e-6)
            if mu > opt.mu_max:
                stats.reason = "regularization limit"
                break
            continue

        expected = -policy.expected_change(1.0)
        if expected <= 1e-12 * (1.0 + abs(cost_cur)):
            if schedule is not None and not schedule.done and schedule.advance():
                cost_cur = total_cost(traj, cost)
                continue
            stats.converged = True
            stats.reason = "no expected improvement"
            break

        accepted = False
        alpha = 1.0
        diverged = False
        while alpha >= opt.alpha_min:
            try:
                new, new_cost = forward_pass(traj, dyn, cost, policy, alpha)
                diverged = False
            except RolloutDiverged:
                diverged = True
                alpha *= 0.5
                continue
            if feasible is not None and not feasible(new.xs):
                stats.infeasible_rejections += 1
                alpha *= 0.5
                continue
            exp_a = -policy.expected_change(alpha)
            if math.isfinite(new_cost) and cost_cur - new_cost >= opt.accept_ratio * exp_a:
                accepted = True
                break
            alpha *= 0.5
        if diverged and not accepted:
            raise RolloutDiverged("rollout diverged even at the smallest step")

        if not accepted:
            mu = max(2.0 * mu, 1e-6)
            if mu > opt.mu_max:
                stats.reason = "regularization limit"
                break
            continue

        delta = cost_cur - new_cost
        stats.accepted += 1
        stats.steps.append((cost_cur, new_cost))
        stats.alphas.append(alpha)
        traj, cost_cur = new, new_cost
        stats.cost_trace.append(cost_cur)
        if callback is not None:
            callback(traj)
        mu = max(0.5 * mu, opt.mu_min) if mu > 0.0 else 0.0

        if schedule is not None and schedule.advance():
            cost_cur = total_cost(traj, cost)
            continue
        if abs(delta) < opt.tol * (1.0 + abs(cost_cur)):
            if schedule is not None and not schedule.done:
                if schedule.advance():
                    cost_cur = total_cost(traj, cost)
                continue
            stats.converged = True
            stats.reason = "cost change below tolerance"
            break
    else:
        stats.reason = "iteration limit"

    stats.mu = mu
    policy = _final_policy(traj, dyn, cost, mu, opt)
    return SolveResult(traj=traj, policy=policy, stats=stats, cost=cost_cur)


def _final_policy(traj, dyn, cost, mu, opt):
    mu = max(mu, 0.0)
    while True:
        try:
            return backward_pass(traj, dyn, cost, mu)
        except NotPositiveDefinite:
            mu = max(2.0 * mu, 1e-6)
            if mu > opt.mu_max:
                raise


class LinearDynamics:
    """``x' = A x + B u + c`` with optional box bounds; used for LQR checks."""

    def __init__(self, A, B, c=None, lower=None, upper=None):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.c = np.zeros(self.A.shape[0]) if c is None else np.asarray(c, dtype=float)
        self.n = self.A.shape[0]
        self.nu = self.B.shape[1]
        self.lower = np.full(self.nu, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        self.upper = np.full(self.nu, np.inf) if upper is None else np.asarray(upper, dtype=float)
        self.simplex = None
        self.frozen = ()

    def step(self, x, u):
        return self.A @ x + self.B @ u + self.c

    def jacobians(self, x, u):
        return self.A, self.B

    def diff(self, x, y):
        return np.asarray(x, dtype=float) - np.asarray(y, dtype=float)


class QuadraticCost:
    """``0.5 x'Qx + q'x + 0.5 u'Ru + r'u + x'N'u`` per step and ``0.5 x'Qf x + qf'x`` at the end."""

    def __init__(self, Q, R, Qf, q=None, r=None, N=None, qf=None):
        self.Q = np.asarray(Q, dtype=float)
        self.R = np.asarray(R, dtype=float)
        self.Qf = np.asarray(Qf, dtype=float)
        n, m = self.Q.shape[0], self.R.shape[0]
        self.q = np.zeros(n) if q is None else np.asarray(q, dtype=float)
        self.r = np.zeros(m) if r is None else np.asarray(r, dtype=float)
        self.N = np.zeros((m, n)) if N is None else np.asarray(N, dtype=float)
        self.qf = np.zeros(n) if qf is None else np.asarray(qf, dtype=float)

    def running(self, x, u, t):
        return float(0.5 * x @ self.Q @ x + self.q @ x + 0.5 * u @ self.R @ u + self.r @ u + u @ self.N @ x)

    def running_derivs(self, x, u, t):
        lx = self.Q @ x + self.q + self.N.T @ u
        lu = self.R @ u + self.r + self.N @ x
        return self.running(x, u, t), lx, lu, self.Q, self.R, self.N

    def final(self, x):
        return float(0.5 * x @ self.Qf @ x + self.qf @ x)

    def final_derivs(self, x):
        return self.final(x), self.Qf @ x + self.qf, self.Qf
