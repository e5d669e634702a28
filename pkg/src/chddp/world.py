"""World files: obstacles, start/goal, model and solver settings.

Worlds are JSON documents tagged ``"schema": "chddp/world/1"``. Loading
applies defaults for every optional field so that ``serialize`` followed by
``load`` reproduces the world exactly.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional

import jsonschema
import numpy as np

from .dynamics import HybridModel, make_model
from .geometry import ConvexPolygon, contains, inflate

WORLD_SCHEMA_TAG = "chddp/world/1"

_num = {"type": "number"}
_pose = {"type": "array", "items": _num, "minItems": 3, "maxItems": 3}
_xy = {"type": "array", "items": _num, "minItems": 2, "maxItems": 2}

WORLD_SCHEMA = {
    "type": "object",
    "required": ["schema", "bounds", "start", "goal"],
    "additionalProperties": False,
    "properties": {
        "schema": {"const": WORLD_SCHEMA_TAG},
        "name": {"type": "string"},
        "bounds": {"type": "array", "items": _num, "minItems": 4, "maxItems": 4},
        "obstacles": {"type": "array", "items": {"type": "array", "items": _xy, "minItems": 3}},
        "start": _pose,
        "goal": _pose,
        "inflation_margin": {"type": "number", "minimum": 0},
        "path_clearance": {"type": "number", "minimum": 0},
        "region_seeds": {"type": ["array", "null"], "items": _xy},
        "seed_spacing": {"type": "number", "exclusiveMinimum": 0},
        "model": {
            "type": "object",
            "required": ["name"],
            "additionalProperties": False,
            "properties": {"name": {"enum": ["box_pusher", "dubins_gears"]}, "params": {"type": "object"}},
        },
        "horizon": {"type": "integer", "minimum": 2},
        "solver": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "tol": {"type": "number", "exclusiveMinimum": 0},
                "mu_init": {"type": "number", "minimum": 0},
                "alpha_min": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "c0": {"type": "number", "exclusiveMinimum": 0},
                "growth": {"type": "number", "exclusiveMinimum": 1},
                "c_max": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "weights": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "w_u": {"type": "number", "minimum": 0},
                "alpha_h": {"type": "number", "exclusiveMinimum": 0},
                "w_pos": {"type": "number", "minimum": 0},
                "w_theta": {"type": "number", "minimum": 0},
            },
        },
        "kdrrt": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_iters": {"type": "integer", "minimum": 1},
                "goal_bias": {"type": "number", "minimum": 0, "maximum": 1},
                "hold_steps": {"type": "integer", "minimum": 1},
                "goal_tol_pos": {"type": "number", "exclusiveMinimum": 0},
                "goal_tol_theta": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

DEFAULTS = {
    "name": "",
    "obstacles": [],
    "inflation_margin": 0.3,
    "path_clearance": 0.2,
    "region_seeds": None,
    "seed_spacing": 0.4,
    "model": {"name": "box_pusher", "params": {}},
    "horizon": 100,
    "solver": {"max_iters": 500, "tol": 1e-7, "mu_init": 1e-6, "alpha_min": 1e-4},
    "schedule": {"c0": 0.1, "growth": 1.2, "c_max": 1e3},
    "weights": {"w_u": 0.1, "alpha_h": 0.1, "w_pos": 200.0, "w_theta": 50.0},
    "kdrrt": {"max_iters": 50_000, "goal_bias": 0.1, "hold_steps": 5, "goal_tol_pos": 0.3, "goal_tol_theta": 0.5},
}


class WorldError(ValueError):
    pass


@dataclass
class World:
    bounds: List[float]
    obstacles: List[List[List[float]]]
    start: List[float]
    goal: List[float]
    name: str = ""
    inflation_margin: float = 0.3
    path_clearance: float = 0.2
    region_seeds: Optional[List[List[float]]] = None
    seed_spacing: float = 0.4
    model: Dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["model"]))
    horizon: int = 100
    solver: Dict = field(default_factory=lambda: dict(DEFAULTS["solver"]))
    schedule: Dict = field(default_factory=lambda: dict(DEFAULTS["schedule"]))
    weights: Dict = field(default_factory=lambda: dict(DEFAULTS["weights"]))
    kdrrt: Dict = field(default_factory=lambda: dict(DEFAULTS["kdrrt"]))

    # derived geometry, built in __post_init__
    def __post_init__(self):
        self.bounds_poly = ConvexPolygon.rectangle(*self.bounds)
        self.obstacle_polys = [ConvexPolygon(v) for v in self.obstacles]
        self.collision_obstacles = [inflate(o, self.inflation_margin) for o in self.obstacle_polys]
        self.planner_obstacles = [inflate(o, self.inflation_margin + self.path_clearance)
                                  for o in self.obstacle_polys]

    def make_model(self) -> HybridModel:
        return make_model(self.model["name"], self.model.get("params") or {})

    def to_dict(self) -> Dict:
        return {
            "schema": WORLD_SCHEMA_TAG,
            "name": self.name,
            "bounds": list(self.bounds),
            "obstacles": [[list(p) for p in o] for o in self.obstacles],
            "start": list(self.start),
            "goal": list(self.goal),
            "inflation_margin": self.inflation_margin,
            "path_clearance": self.path_clearance,
            "region_seeds": None if self.region_seeds is None else [list(s) for s in self.region_seeds],
            "seed_spacing": self.seed_spacing,
            "model": copy.deepcopy(self.model),
            "horizon": self.horizon,
            "solver": dict(self.solver),
            "schedule": dict(self.schedule),
            "weights": dict(self.weights),
            "kdrrt": dict(self.kdrrt),
        }

    def __eq__(self, other):
        return isinstance(other, World) and self.to_dict() == other.to_dict()


def serialize_world(world: World) -> str:
    return json.dumps(world.to_dict(), indent=2)


def world_from_dict(data: Dict) -> World:
    try:
        jsonschema.validate(data, WORLD_SCHEMA)
    except jsonschema.ValidationError as err:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise WorldError(f"invalid world field '{where}': {err.message}") from None

    d = copy.deepcopy(data)
    for key, default in DEFAULTS.items():
        if isinstance(default, dict) and key != "model":
            merged = dict(default)
            merged.update(d.get(key) or {})
            d[key] = merged
        elif key not in d:
            d[key] = copy.deepcopy(default)
    d["model"].setdefault("params", {})
    d.pop("schema")

    xmin, ymin, xmax, ymax = d["bounds"]
    if not (xmin < xmax and ymin < ymax):
        raise WorldError("invalid world field 'bounds': need xmin < xmax and ymin < ymax")
    try:
        world = World(**d)
    except ValueError as err:
        raise WorldError(str(err)) from None
    _check_pose(world, world.start, "start")
    _check_pose(world, world.goal, "goal")
    if world.schedule["c_max"] < world.schedule["c0"]:
        raise WorldError("invalid world field 'schedule/c_max': must be >= c0")
    return world


def _check_pose(world: World, pose, label):
    if not contains(world.bounds_poly, pose[:2]):
        raise WorldError(f"{label} outside bounds")
    for obs in world.collision_obstacles:
        if contains(obs, pose[:2]):
            raise WorldError(f"{label} in collision")


def load_world(path) -> World:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as err:
        raise WorldError(f"world file is not valid JSON: {err}") from None
    return world_from_dict(data)


BUNDLED = ("corridor", "central_block", "clutter")


def bundled_world_path(name: str) -> Path:
    if name not in BUNDLED:
        raise KeyError(f"no bundled world {name!r}; choose from {BUNDLED}")
    return Path(str(resources.files("chddp") / "worlds" / f"{name}.json"))


def load_bundled(name: str) -> World:
    return load_world(bundled_world_path(name))


def resolve_world(spec: str) -> World:
    """Load a world by file path, or by bundled name."""
    if spec in BUNDLED and not Path(spec).exists():
        return load_bundled(spec)
    return load_world(spec)
