"""Two-stage hybrid DDP for planar systems with discrete modes in cluttered worlds."""

from .ddp import SolverOptions, Trajectory, solve
from .dynamics import BoxPusher, DubinsGears, RelaxedDynamics, make_model
from .freespace import ConvexRegion, FreeSpace, grow_region
from .geometry import ConvexPolygon, Halfspace, Point2
from .pipeline import ChddpError, ChddpOptions, run_chddp
from .world import World, load_bundled, load_world

__all__ = [
    "BoxPusher", "ChddpError", "ChddpOptions", "ConvexPolygon", "ConvexRegion", "DubinsGears", "FreeSpace",
    "Halfspace", "Point2", "RelaxedDynamics", "SolverOptions", "Trajectory", "World", "grow_region",
    "load_bundled", "load_world", "make_model", "run_chddp", "solve",
]
