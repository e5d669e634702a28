"""CHDDP against the kinodynamic RRT baseline on one world.

KDRRT runs once per seed and CHDDP runs once (it is deterministic) on the
shortest homotopy path. Every solution is scored with the same goal
objective. Wall times appear in the printed table only, so the JSON report
is byte-identical across runs with the same arguments.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .costs import count_switches, goal_cost_for, wrapped_error
from .pipeline import ChddpError, ChddpOptions, _kdrrt_options, run_chddp
from .planners import PlanningError, kdrrt

REPORT_SCHEMA = "chddp/bench/1"


@dataclass
class RunReport:
    world: str
    seed: int
    rrt_runs: int
    kdrrt_costs: List[Optional[float]]
    kdrrt_switches: List[Optional[int]]
    chddp: Dict
    times: Dict[str, float] = field(default_factory=dict)

    @property
    def _ok_costs(self) -> List[float]:
        return [c for c in self.kdrrt_costs if c is not None]

    @property
    def failure_rate(self) -> float:
        return 1.0 - len(self._ok_costs) / self.rrt_runs if self.rrt_runs else 0.0

    @property
    def cost_mean(self) -> Optional[float]:
        return _mean(self._ok_costs)

    @property
    def cost_stderr(self) -> Optional[float]:
        return _stderr(self._ok_costs)

    @property
    def switches_mean(self) -> Optional[float]:
        return _mean([s for s in self.kdrrt_switches if s is not None])

    @property
    def switches_stderr(self) -> Optional[float]:
        return _stderr([s for s in self.kdrrt_switches if s is not None])

    def to_dict(self) -> Dict:
        return {
            "schema": REPORT_SCHEMA,
            "world": self.world,
            "seed": self.seed,
            "rrt_runs": self.rrt_runs,
            "kdrrt": {
                "costs": self.kdrrt_costs,
                "switches": self.kdrrt_switches,
                "cost_mean": self.cost_mean,
                "cost_stderr": self.cost_stderr,
                "switches_mean": self.switches_mean,
                "switches_stderr": self.switches_stderr,
                "failure_rate": self.failure_rate,
            },
            "chddp": dict(self.chddp),
        }

    def table(self) -> str:
        def num(v, spec=".3f"):
            return "n/a" if v is None else format(v, spec)

        c = self.chddp
        rows = [
            f"world {self.world}  seeds {self.seed}..{self.seed + self.rrt_runs - 1}",
            f"{'method':<8} {'cost':>22} {'switches':>16} {'success':>9} {'time[s]':>9}",
            f"{'KDRRT':<8} {num(self.cost_mean) + ' +- ' + num(self.cost_stderr):>22} "
            f"{num(self.switches_mean, '.2f') + ' +- ' + num(self.switches_stderr, '.2f'):>16} "
            f"{1.0 - self.failure_rate:>9.2f} {self.times.get('kdrrt', 0.0):>9.2f}",
            f"{'CHDDP':<8} {num(c.get('cost')):>22} {str(c.get('switches', 'n/a')):>16} "
            f"{float(c['success']):>9.2f} {self.times.get('chddp', 0.0):>9.2f}",
        ]
        return "\n".join(rows)


def _mean(xs) -> Optional[float]:
    return float(np.mean(xs)) if len(xs) else None


def _stderr(xs) -> Optional[float]:
    if not len(xs):
        return None
    if len(xs) == 1:
        return 0.0
    return float(np.std(xs, ddof=1) / math.sqrt(len(xs)))


def run_bench(world, rrt_runs: int = 50, seed: int = 0) -> RunReport:
    model = world.make_model()
    opts = ChddpOptions.from_world(world)
    scorer = goal_cost_for(model, world.goal, opts.c_max, w_u=opts.w_u, w_pos=opts.w_pos, w_theta=opts.w_theta)

    t0 = time.perf_counter()
    costs: List[Optional[float]] = []
    switches: List[Optional[int]] = []
    for s in range(seed, seed + rrt_runs):
        try:
            res = kdrrt(world.collision_obstacles, world.bounds_poly, model, world.start, world.goal,
                        _kdrrt_options(world, s))
        except PlanningError:
            costs.append(None)
            switches.append(None)
            continue
        costs.append(scorer.breakdown(res.traj)["total"])
        switches.append(count_switches(res.modes))
    t1 = time.perf_counter()

    try:
        run = run_chddp(world, model, options=opts, only_shortest=True)
        best = run.best
        pos, ang = wrapped_error(best.traj.xs[-1], world.goal)
        chddp = {"success": True, "cost": best.total_cost, "switches": best.switches, "feasible": best.feasible,
                 "terminal_position_error": pos, "terminal_angle_error": ang, "planner": run.planner}
    except ChddpError as err:
        chddp = {"success": False, "cost": None, "switches": None, "error": str(err)}
    t2 = time.perf_counter()

    return RunReport(world.name, seed, rrt_runs, costs, switches, chddp, {"kdrrt": t1 - t0, "chddp": t2 - t1})
