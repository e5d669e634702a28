"""Time the compiled kernels against the pure-Python fallback.

Run with ``python3 benchmarks/bench_kernels.py``. Each kernel is called on the
same inputs through both backends; outputs are compared before timing.
"""

import argparse
import timeit

import numpy as np

from chddp import kernels
from chddp.world import load_bundled


def cases(rng):
    world = load_bundled("clutter")
    A, b, starts = kernels.pack_polygons(world.collision_obstacles)
    pts = np.ascontiguousarray(rng.uniform([0, 0], [6, 5], size=(200, 2)))
    nodes = np.ascontiguousarray(rng.uniform([0, 0, -3], [6, 5, 3], size=(2000, 3)))
    return {
        "propagate_box": ((0.5, 0.5, 0.1, 0.8, 0.3, 1, 2.0, 0.1, 5), {}),
        "propagate_dubins": ((0.5, 0.5, 0.1, 0.7, 1.0, 0.1, 5), {}),
        "nearest_weighted": ((nodes, len(nodes), 3.0, 2.0, 0.5, 0.5), {}),
        "any_point_in_polygons": ((pts, A, b, starts, 0.0), {}),
        "first_region": ((pts, A, b, starts, 0.0), {}),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--number", type=int, default=2000)
    args = ap.parse_args()
    py = kernels.get_backend("python")
    try:
        cy = kernels.get_backend("cython")
    except ImportError:
        print("compiled kernels not built; only the Python backend is available")
        cy = None
    rng = np.random.default_rng(0)
    print(f"{'kernel':<24} {'python [us]':>12} {'cython [us]':>12} {'speedup':>8}")
    for name, (a, kw) in cases(rng).items():
        f_py = getattr(py, name)
        t_py = timeit.timeit(lambda: f_py(*a, **kw), number=args.number) / args.number * 1e6
        if cy is None:
            print(f"{name:<24} {t_py:>12.2f} {'-':>12} {'-':>8}")
            continue
        f_cy = getattr(cy, name)
        np.testing.assert_allclose(np.asarray(f_py(*a, **kw)), np.asarray(f_cy(*a, **kw)), rtol=0, atol=1e-12)
        t_cy = timeit.timeit(lambda: f_cy(*a, **kw), number=args.number) / args.number * 1e6
        print(f"{name:<24} {t_py:>12.2f} {t_cy:>12.2f} {t_py / t_cy:>8.1f}")


if __name__ == "__main__":
    main()
