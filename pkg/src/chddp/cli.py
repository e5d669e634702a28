"""Command line entry point: ``chddp solve | bench | regions``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Dict, List, Optional

from . import jsonio
from .bench import run_bench
from .costs import goal_cost_for, mode_sequence
from .ddp import RolloutDiverged
from .pipeline import ChddpError, ChddpOptions, _kdrrt_options, build_freespace, geometric_paths, run_chddp
from .planners import PlanningError, kdrrt
from .render import render_svg
from .world import WorldError, resolve_world

TRAJECTORY_SCHEMA = "chddp/trajectory/1"

log = logging.getLogger("chddp")


def trajectory_dict(traj, m: int, costs: Dict[str, float], freespace=None) -> Dict:
    return {
        "schema": TRAJECTORY_SCHEMA,
        "states": traj.xs,
        "controls": traj.us[:, :m],
        "mode_probs": traj.us[:, m:],
        "modes": mode_sequence(traj.us, m),
        "costs": {k: costs[k] for k in ("total", "control", "switching", "terminal")},
        "regions": [] if freespace is None else [r.to_json() for r in freespace.regions],
    }


def _load(args):
    world = resolve_world(args.world)
    if getattr(args, "rrt_max_iters", None) is not None:
        world.kdrrt["max_iters"] = args.rrt_max_iters
    if getattr(args, "rrt_goal_bias", None) is not None:
        world.kdrrt["goal_bias"] = args.rrt_goal_bias
    return world


def _add_rrt_args(p):
    p.add_argument("--rrt-max-iters", type=int, default=None, help="KDRRT iteration budget")
    p.add_argument("--rrt-goal-bias", type=float, default=None, help="KDRRT goal sampling probability")


def cmd_solve(args) -> int:
    world = _load(args)
    model = world.make_model()
    opts = ChddpOptions.from_world(world)
    if args.homotopy_k is not None:
        opts.homotopy_k = args.homotopy_k
    if args.planner == "rrt-only":
        res = kdrrt(world.collision_obstacles, world.bounds_poly, model, world.start, world.goal,
                    _kdrrt_options(world, args.seed))
        scorer = goal_cost_for(model, world.goal, opts.c_max, w_u=opts.w_u, w_pos=opts.w_pos, w_theta=opts.w_theta)
        traj, fs, path = res.traj, None, None
        costs = scorer.breakdown(traj)
    else:
        run = run_chddp(world, model, planner=args.planner, options=opts, rrt_seed=args.seed)
        best = run.best
        traj, fs, costs = best.traj, best.freespace, best.costs
        path = best.path.points if best.path is not None else None
        log.info("planner %s, cost %.6g, %d switches", run.planner, best.total_cost, best.switches)
    Path(args.out).write_text(jsonio.dumps(trajectory_dict(traj, model.m, costs, fs)))
    if args.svg:
        svg = render_svg(world, fs, traj.xs, mode_sequence(traj.us, model.m), path)
        Path(args.svg).write_text(svg)
    return 0


def cmd_bench(args) -> int:
    world = _load(args)
    report = run_bench(world, args.rrt_runs, args.seed)
    print(report.table())
    if args.out:
        Path(args.out).write_text(jsonio.dumps(report.to_dict()))
    return 0


def cmd_regions(args) -> int:
    world = resolve_world(args.world)
    path = geometric_paths(world, 1)[0]
    fs = build_freespace(world, path.points, world.seed_spacing)
    print(f"{len(fs.regions)} regions")
    if args.svg:
        Path(args.svg).write_text(render_svg(world, fs, path=path.points))
    if args.out:
        Path(args.out).write_text(jsonio.dumps({"regions": fs.to_json()}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="chddp", description="Hybrid trajectory optimisation in 2D clutter.")
    ap.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="optimise a trajectory for a world")
    s.add_argument("--world", required=True, help="world JSON file or bundled world name")
    s.add_argument("--out", required=True, help="trajectory JSON output")
    s.add_argument("--svg", help="optional SVG rendering")
    s.add_argument("--planner", choices=("visgraph", "rrt", "rrt-only"), default="visgraph")
    s.add_argument("--homotopy-k", type=int, default=None)
    s.add_argument("--seed", type=int, default=0, help="KDRRT seed for the rrt planners")
    _add_rrt_args(s)
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="compare CHDDP with seeded KDRRT runs")
    b.add_argument("--world", required=True)
    b.add_argument("--rrt-runs", type=int, default=50)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="JSON report output")
    _add_rrt_args(b)
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("regions", help="decompose the free space along the shortest path")
    r.add_argument("--world", required=True)
    r.add_argument("--svg")
    r.add_argument("--out", help="regions JSON output")
    r.set_defaults(func=cmd_regions)
    return ap


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (WorldError, ChddpError, PlanningError, RolloutDiverged, OSError, ValueError, KeyError) as err:
        print(f"chddp: error: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
