"""Two-stage hybrid trajectory optimisation in clutter.

Stage 1 tracks a geometric reference path with the relaxed (mode-weighted)
dynamics while a growing switching penalty forces the weights to a single
mode per step; obstacles are ignored. Stage 2 keeps that mode sequence and
optimises effort plus goal error, accepting only rollouts that stay inside the
free-space regions.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import ddp
from .costs import (GoalCost, SwitchSchedule, TrackingCost, _FixedSwitch, count_switches, mode_sequence,
                    wrapped_error)
from .ddp import SolverOptions, Trajectory, rollout
from .dynamics import HybridModel, RelaxedDynamics
from .freespace import FreeSpace
from .geometry import Point2
from .planners import (GeometricPath, KdrrtOptions, PlanningError, build_visibility_graph, h_signature,
                       homotopy_paths, kdrrt, polyline_length)

log = logging.getLogger(__name__)

COLLAPSE_THRESHOLD = 0.99


class ChddpError(RuntimeError):
    pass


class ModeCollapseError(ChddpError):
    pass


class InfeasibleInitialization(ChddpError):
    pass


@dataclass
class ChddpOptions:
    solver: SolverOptions = field(default_factory=SolverOptions)
    c0: float = 0.1
    growth: float = 1.2
    c_max: float = 1e3
    w_u: float = 0.1
    alpha_h: float = 0.1
    w_pos: float = 200.0
    w_theta: float = 50.0
    homotopy_k: int = 3
    seed_spacing: float = 0.4
    repair_rounds: int = 3
    buffer_margin: float = 0.05
    buffer_weight: float = 1e3

    @classmethod
    def from_world(cls, world, **overrides) -> "ChddpOptions":
        s, sc, w = world.solver, world.schedule, world.weights
        opts = cls(
            solver=SolverOptions(max_iters=s["max_iters"], tol=s["tol"], mu_init=s["mu_init"],
                                 alpha_min=s["alpha_min"]),
            c0=sc["c0"], growth=sc["growth"], c_max=sc["c_max"],
            w_u=w["w_u"], alpha_h=w["alpha_h"], w_pos=w["w_pos"], w_theta=w["w_theta"],
            seed_spacing=world.seed_spacing,
        )
        for k, v in overrides.items():
            setattr(opts, k, v)
        return opts

    def schedule(self) -> SwitchSchedule:
        return SwitchSchedule(self.c0, self.growth, self.c_max)


# ---------------------------------------------------------------- references

def resample_reference(path, T: int, start=None, goal=None) -> np.ndarray:
    """``T + 1`` arc-length-uniform poses along a polyline.

    Headings follow the segment each sample falls on (a sample on a corner
    takes the outgoing segment). The last pose takes the goal orientation
    when ``goal`` is given; ``start``/``goal`` positions pin the endpoints.
    """
    if T < 1:
        raise ValueError("horizon must be at least 1")
    pts = np.asarray(path, dtype=float)[:, :2]
    if pts.shape[0] < 2:
        raise ValueError("path needs at least 2 points")
    keep = np.concatenate([[True], np.hypot(*np.diff(pts, axis=0).T) > 0.0])
    pts = pts[keep]
    if pts.shape[0] < 2:
        raise ValueError("zero-length path")
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    total = cum[-1]
    headings = np.arctan2(seg[:, 1], seg[:, 0])

    s = total * np.arange(T + 1) / T
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg_len) - 1)
    frac = (s - cum[idx]) / seg_len[idx]
    ref = np.empty((T + 1, 3))
    ref[:, :2] = pts[idx] + frac[:, None] * seg[idx]
    ref[:, 2] = headings[idx]
    ref[-1, :2] = pts[-1]
    if start is not None:
        ref[0, :2] = np.asarray(start, dtype=float)[:2]
    if goal is not None:
        g = np.asarray(goal, dtype=float)
        ref[-1, :2] = g[:2]
        if g.size > 2:
            ref[-1, 2] = g[2]
    return ref


def seeds_along(path, spacing: float) -> List[np.ndarray]:
    """Path vertices, segment midpoints, and extra points every ``spacing``."""
    pts = np.asarray(path, dtype=float)[:, :2]
    out = [pts[0]]
    for p, q in zip(pts[:-1], pts[1:]):
        L = float(np.hypot(*(q - p)))
        if L == 0.0:
            continue
        n = max(2, int(math.ceil(L / spacing)))
        for j in range(1, n):
            out.append(p + (q - p) * j / n)
        mid = 0.5 * (p + q)
        if n % 2:
            out.append(mid)
        out.append(q)
    return out


def build_freespace(world, path, spacing: Optional[float] = None) -> FreeSpace:
    if world.region_seeds:
        seeds = [np.asarray(s, dtype=float) for s in world.region_seeds]
    else:
        seeds = seeds_along(path, spacing or world.seed_spacing)
    return FreeSpace.from_seeds(world.collision_obstacles, world.bounds_poly,
                                [Point2(float(s[0]), float(s[1])) for s in seeds])


# ---------------------------------------------------------------- stage 1

@dataclass
class Stage1Result:
    traj: Trajectory
    stats: ddp.SolveStats
    c_st: float
    modes: np.ndarray
    cost: float
    tracking_cost: TrackingCost


def initial_controls(model: HybridModel, T: int) -> np.ndarray:
    """Mid-box continuous controls with uniform mode weights."""
    u = 0.5 * (model.spec.u_lower + model.spec.u_upper)
    p = np.full(model.n_modes, 1.0 / model.n_modes)
    return np.tile(np.concatenate([u, p]), (T, 1))


def nudge_weights(us, m: int, p_th: float) -> Tuple[np.ndarray, int]:
    """Break ties between modes whose weights all sit at or above ``p_th``.

    With more than two modes the switching penalty is convex along the edge
    between two such modes, so an even split is a local minimum the solver
    cannot leave. Every runner-up weight at or above the threshold is moved
    just below it (the mass goes to the leader), which puts it on the branch
    that drives it to zero. The leader is the largest weight; near-ties go to
    the previous step's mode. Returns the new controls and the number of
    steps changed.
    """
    us = np.array(us, dtype=float)
    changed = 0
    prev = None
    for t in range(len(us)):
        p = us[t, m:]
        high = np.nonzero(p >= p_th)[0]
        lead = int(np.argmax(p))
        if prev is not None and prev in high and p[prev] >= p[lead] - 1e-6:
            lead = prev
        if len(high) > 1 and p.max() < COLLAPSE_THRESHOLD:
            for a in high:
                if a != lead:
                    give = p[a] - 0.9 * p_th
                    p[a] -= give
                    p[lead] += give
            changed += 1
        prev = lead
    return us, changed


def stalled_steps(traj: Trajectory, dyn: RelaxedDynamics, tol: float = 1e-9) -> np.ndarray:
    """Steps whose continuous controls have lost authority (rank-deficient ``df/du``).

    The box pusher at zero speed is the typical case: the push angle then has
    no effect, so the solver cannot leave ``v = 0`` once it gets there.
    """
    m = dyn.model.m
    out = []
    for t in range(traj.T):
        B = dyn.jacobians(traj.xs[t], traj.us[t])[1][:, :m]
        if np.linalg.svd(B, compute_uv=False).min() < tol:
            out.append(t)
    return np.asarray(out, dtype=np.int64)


def stage1_track(reference, model: HybridModel, options: Optional[ChddpOptions] = None, x0=None,
                 schedule: Optional[SwitchSchedule] = None, us_init=None, max_nudges: int = 10,
                 max_restarts: int = 3) -> Stage1Result:
    """Track ``reference`` with the relaxed dynamics until the mode weights collapse.

    Two post-convergence moves handle stationary points of the local model:
    ties between modes are broken (``nudge_weights``), and steps with stalled
    controls are restarted from mid-box values, kept only if the cost drops.
    """
    opts = options or ChddpOptions()
    reference = np.asarray(reference, dtype=float)
    T = reference.shape[0] - 1
    x0 = reference[0] if x0 is None else np.asarray(x0, dtype=float)
    schedule = schedule or opts.schedule()
    dyn = RelaxedDynamics(model)
    cost = TrackingCost(reference, model.m, model.n_modes, schedule, alpha_h=opts.alpha_h, w_u=opts.w_u)
    us = initial_controls(model, T) if us_init is None else np.asarray(us_init, dtype=float)
    stats = None
    for _ in range(max_nudges + 1):
        res = ddp.solve(x0, rollout(dyn, x0, us), dyn, cost, opts.solver, schedule=schedule)
        stats = _merge_stats(stats, res.stats)
        worst = _min_max_weight(res.traj, model.m)
        if worst >= COLLAPSE_THRESHOLD:
            break
        us, changed = nudge_weights(res.traj.us, model.m, cost.p_th)
        if changed == 0:
            break
    if worst < COLLAPSE_THRESHOLD:
        raise ModeCollapseError(
            f"mode collapse failure: min_t max_a p = {worst:.4f} after {stats.iterations} iterations "
            f"(C_ST = {schedule.value:g})")

    mid = 0.5 * (model.spec.u_lower + model.spec.u_upper)
    for _ in range(max_restarts):
        stalled = stalled_steps(res.traj, dyn)
        if stalled.size == 0:
            break
        us = res.traj.us.copy()
        us[stalled, :model.m] = mid
        trial = ddp.solve(x0, rollout(dyn, x0, us), dyn, cost, opts.solver, schedule=schedule)
        worse = trial.cost >= res.cost - 1e-12 * (1.0 + abs(res.cost))
        if worse or _min_max_weight(trial.traj, model.m) < COLLAPSE_THRESHOLD:
            break
        stats = _merge_stats(stats, trial.stats)
        res = trial
    return Stage1Result(res.traj, stats, schedule.value, mode_sequence(res.traj.us, model.m), res.cost, cost)


def _min_max_weight(traj: Trajectory, m: int) -> float:
    return float(traj.us[:, m:].max(axis=1).min()) if traj.T else 1.0


def _merge_stats(acc: Optional[ddp.SolveStats], new: ddp.SolveStats) -> ddp.SolveStats:
    if acc is None:
        return new
    acc.iterations += new.iterations
    acc.accepted += new.accepted
    acc.cost_trace += new.cost_trace
    acc.steps += new.steps
    acc.alphas += new.alphas
    acc.infeasible_rejections += new.infeasible_rejections
    acc.converged = new.converged
    acc.reason = new.reason
    acc.mu = new.mu
    return acc


# ---------------------------------------------------------------- stage 2

@dataclass
class ChddpResult:
    traj: Trajectory
    policy: ddp.FeedbackPolicy
    modes: np.ndarray
    costs: dict
    stage1: Optional[Stage1Result]
    stage2_stats: ddp.SolveStats
    freespace: FreeSpace
    feasible: bool
    warning: Optional[str] = None
    path: Optional[GeometricPath] = None
    repaired: bool = False

    @property
    def switches(self) -> int:
        return count_switches(self.modes)

    @property
    def total_cost(self) -> float:
        return self.costs["total"]


def snap_modes(us, m: int) -> np.ndarray:
    """Replace each weight vector by the one-hot vector of its largest entry."""
    us = np.array(us, dtype=float)
    P = np.zeros_like(us[:, m:])
    P[np.arange(len(us)), np.argmax(us[:, m:], axis=1)] = 1.0
    us[:, m:] = P
    return us


def _frozen_dynamics(model):
    return RelaxedDynamics(model, frozen=tuple(range(model.m, model.nu)))


def _repair(traj, fs: FreeSpace, model, opts: ChddpOptions, c_st: float):
    """Re-track projected states until every configuration is inside the regions."""
    dyn = _frozen_dynamics(model)
    for _ in range(opts.repair_rounds):
        miss = np.nonzero(fs.membership_all(traj.xs) < 0)[0]
        if miss.size == 0:
            return traj
        ref = traj.xs.copy()
        for t in miss:
            q = fs.project_to_free(ref[t])
            step = q[:2] - ref[t, :2]
            n = float(np.hypot(*step))
            deeper = q.copy()
            if n > 0:
                deeper[:2] = q[:2] + 0.1 * step / n
            ref[t] = deeper if fs.membership(deeper) is not None else q
        cost = TrackingCost(ref, model.m, model.n_modes, _FixedSwitch(c_st), alpha_h=opts.alpha_h, w_u=opts.w_u)
        traj = ddp.solve(traj.xs[0], traj, dyn, cost, opts.solver).traj
    if np.any(fs.membership_all(traj.xs) < 0):
        raise InfeasibleInitialization("infeasible initialization: repaired trajectory still leaves the free space")
    return traj


class BufferedCost:
    """Wraps a cost with ``weight * max(0, margin - depth)^2`` on every state.

    ``depth`` is the clearance inside the free-space regions. The term is zero
    for states deeper than ``margin``; it lets the local model see region
    walls before the feasibility test in the line search rejects a step.
    """

    def __init__(self, base, fs: FreeSpace, margin: float = 0.05, weight: float = 1e3):
        self.base = base
        self.fs = fs
        self.margin = float(margin)
        self.weight = float(weight)

    def __getattr__(self, name):
        return getattr(self.base, name)

    def _buffer(self, x):
        n = len(x)
        d, normal = self.fs.depth(x)
        gap = self.margin - d
        g, H = np.zeros(n), np.zeros((n, n))
        if gap <= 0.0:
            return 0.0, g, H
        g[:2] = -2.0 * self.weight * gap * normal
        H[:2, :2] = 2.0 * self.weight * np.outer(normal, normal)
        return self.weight * gap * gap, g, H

    def running(self, x, u, t):
        return self.base.running(x, u, t) + self._buffer(x)[0]

    def running_derivs(self, x, u, t):
        val, lx, lu, lxx, luu, lux = self.base.running_derivs(x, u, t)
        bv, bg, bH = self._buffer(x)
        return val + bv, lx + bg, lu, lxx + bH, luu, lux

    def final(self, x):
        return self.base.final(x) + self._buffer(x)[0]

    def final_derivs(self, x):
        val, g, H = self.base.final_derivs(x)
        bv, bg, bH = self._buffer(x)
        return val + bv, g + bg, H + bH


def stage2_optimize(traj: Trajectory, fs: Optional[FreeSpace], model: HybridModel, goal,
                    options: Optional[ChddpOptions] = None, c_st: Optional[float] = None,
                    check_collisions: bool = True, callback=None) -> ChddpResult:
    """Optimise effort and goal error with the mode sequence of ``traj`` held fixed.

    ``callback`` receives every accepted iterate.
    """
    opts = options or ChddpOptions()
    c_st = opts.c_max if c_st is None else c_st
    x0 = traj.xs[0]
    us = snap_modes(traj.us, model.m)
    dyn = _frozen_dynamics(model)
    start_traj = rollout(dyn, x0, us)

    repaired = False
    feasible = None
    if check_collisions:
        if not fs.all_free(start_traj.xs):
            start_traj = _repair(start_traj, fs, model, opts, c_st)
            repaired = True
        feasible = fs.all_free

    cost = GoalCost(goal, model.m, model.n_modes, _FixedSwitch(c_st), w_u=opts.w_u, w_pos=opts.w_pos,
                    w_theta=opts.w_theta)
    objective = BufferedCost(cost, fs, opts.buffer_margin, opts.buffer_weight) if check_collisions else cost
    res = ddp.solve(x0, start_traj, dyn, objective, opts.solver, feasible=feasible, callback=callback)
    warning = None
    if res.stats.accepted == 0 and res.stats.infeasible_rejections > 0:
        warning = "no collision-free step"
    breakdown = cost.breakdown(res.traj)
    costs = {k: breakdown[k] for k in ("total", "control", "switching", "terminal")}
    ok = fs.all_free(res.traj.xs) if fs is not None else True
    return ChddpResult(res.traj, res.policy, mode_sequence(res.traj.us, model.m), costs, None, res.stats, fs,
                       ok, warning, repaired=repaired)


# ---------------------------------------------------------------- orchestration

@dataclass
class Candidate:
    path: GeometricPath
    result: Optional[ChddpResult]
    error: Optional[str] = None


@dataclass
class ChddpRun:
    best: ChddpResult
    candidates: List[Candidate]
    planner: str


def optimize_path(world, model, path: GeometricPath, opts: ChddpOptions) -> ChddpResult:
    start = np.asarray(world.start, dtype=float)
    goal = np.asarray(world.goal, dtype=float)
    T = world.horizon
    if path.length == 0.0:
        reference = np.tile(start, (T + 1, 1))
        reference[-1, 2] = goal[2]
    else:
        reference = resample_reference(path.points, T, start, goal)
    fs = build_freespace(world, path.points if path.length > 0 else np.vstack([start[:2], start[:2]]),
                         opts.seed_spacing)
    s1 = stage1_track(reference, model, opts, x0=start)
    res = stage2_optimize(s1.traj, fs, model, goal, opts, c_st=opts.c_max)
    res.stage1 = s1
    res.path = path
    return res


def _kdrrt_options(world, seed) -> KdrrtOptions:
    k = world.kdrrt
    return KdrrtOptions(max_iters=k["max_iters"], goal_bias=k["goal_bias"], hold_steps=k["hold_steps"],
                        goal_tol_pos=k["goal_tol_pos"], goal_tol_theta=k["goal_tol_theta"], rng_seed=seed)


def kdrrt_path(world, model, seed: int = 0) -> GeometricPath:
    res = kdrrt(world.collision_obstacles, world.bounds_poly, model, world.start, world.goal,
                _kdrrt_options(world, seed))
    pts = res.traj.xs[:, :2]
    return GeometricPath(pts, polyline_length(pts), h_signature(pts, world.obstacle_polys))


def geometric_paths(world, k: int) -> List[GeometricPath]:
    start, goal = world.start, world.goal
    if np.allclose(start[:2], goal[:2]):
        pts = np.array([start[:2], goal[:2]], dtype=float)
        return [GeometricPath(pts, 0.0, ())]
    graph = build_visibility_graph(world.planner_obstacles, world.bounds_poly, start, goal)
    return homotopy_paths(graph, world.planner_obstacles, k)


def run_chddp(world, model: Optional[HybridModel] = None, planner: str = "visgraph",
              options: Optional[ChddpOptions] = None, rrt_seed: int = 0, only_shortest: bool = False) -> ChddpRun:
    """Plan geometric paths, then run both stages on each and keep the cheapest feasible result.

    ``planner`` is ``"visgraph"`` (homotopy classes from the visibility
    graph, KDRRT fallback if none of them works) or ``"rrt"`` (KDRRT path
    as the reference).
    """
    model = model or world.make_model()
    opts = options or ChddpOptions.from_world(world)
    if planner == "visgraph":
        try:
            paths = geometric_paths(world, 1 if only_shortest else opts.homotopy_k)
        except PlanningError as err:
            log.info("visibility graph failed (%s); falling back to KDRRT", err)
            paths = []
    elif planner == "rrt":
        paths = []
    else:
        raise ValueError(f"unknown planner {planner!r}")

    candidates = _attempt(world, model, paths, opts)
    used = planner
    if not any(c.result is not None for c in candidates):
        try:
            rpath = kdrrt_path(world, model, rrt_seed)
        except PlanningError as err:
            if not paths:
                raise ChddpError(f"no feasible path: {err}") from None
            raise ChddpError("no feasible path: " + "; ".join(c.error or "" for c in candidates)) from None
        used = "rrt" if planner == "rrt" else "visgraph+rrt"
        candidates += _attempt(world, model, [rpath], opts)
    ok = [(i, c) for i, c in enumerate(candidates) if c.result is not None]
    if not ok:
        raise ChddpError("no feasible path: " + "; ".join(c.error or "" for c in candidates))
    _, best = min(ok, key=lambda ic: (ic[1].result.total_cost, ic[0]))
    return ChddpRun(best.result, candidates, used)


def _attempt(world, model, paths: Sequence[GeometricPath], opts) -> List[Candidate]:
    out = []
    for path in paths:
        try:
            res = optimize_path(world, model, path, opts)
            out.append(Candidate(path, res if res.feasible else None, None if res.feasible else "infeasible"))
        except (ChddpError, ddp.RolloutDiverged, ValueError) as err:
            log.info("candidate %s failed: %s", path.signature, err)
            out.append(Candidate(path, None, str(err)))
    return out


def terminal_error(result: ChddpResult, goal):
    return wrapped_error(result.traj.xs[-1], goal)
