"""SVG renderings of worlds, free-space regions and trajectories.

Output is plain text built by string formatting, so the same inputs always
give the same bytes.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

# Fixed colour per mode index; mode i uses PALETTE[i % 8].
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf")

SCALE = 100.0  # pixels per metre


def _fmt(v: float) -> str:
    return f"{v:.3f}"


class _Canvas:
    def __init__(self, bounds):
        self.xmin, self.ymin, self.xmax, self.ymax = bounds
        self.items = []

    def xy(self, p):
        # SVG y grows downwards
        return _fmt((p[0] - self.xmin) * SCALE), _fmt((self.ymax - p[1]) * SCALE)

    def polygon(self, verts, style):
        pts = " ".join(",".join(self.xy(v)) for v in verts)
        self.items.append(f'<polygon points="{pts}" {style}/>')

    def line(self, p, q, style):
        (x1, y1), (x2, y2) = self.xy(p), self.xy(q)
        self.items.append(f'<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" {style}/>')

    def circle(self, p, r, style):
        cx, cy = self.xy(p)
        self.items.append(f'<circle cx="{cx}" cy="{cy}" r="{_fmt(r)}" {style}/>')

    def heading(self, pose, length, style):
        tip = (pose[0] + length * np.cos(pose[2]), pose[1] + length * np.sin(pose[2]))
        self.line(pose[:2], tip, style)

    def svg(self) -> str:
        w = _fmt((self.xmax - self.xmin) * SCALE)
        h = _fmt((self.ymax - self.ymin) * SCALE)
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
                f'viewBox="0 0 {w} {h}">')
        frame = f'<rect x="0" y="0" width="{w}" height="{h}" fill="white" stroke="black"/>'
        return "\n".join([head, frame, *self.items, "</svg>"]) + "\n"


def render_svg(world, freespace=None, states=None, modes: Optional[Sequence[int]] = None, path=None) -> str:
    """Draw ``world`` with optional regions, reference path and trajectory.

    Args:
        world: a loaded ``World``.
        freespace: ``FreeSpace`` whose regions are drawn translucent.
        states: ``(T+1, >=2)`` trajectory states.
        modes: length ``T`` mode indices; segment ``t`` gets ``PALETTE[modes[t]]``.
        path: geometric reference polyline, drawn thin and dashed.
    """
    cv = _Canvas(world.bounds)
    if freespace is not None:
        for r in freespace.regions:
            cv.polygon(r.vertices(), 'fill="#4c9be8" fill-opacity="0.15" stroke="#4c9be8" stroke-width="1"')
    for o in world.obstacle_polys:
        cv.polygon(o.vertices, 'fill="#888888" stroke="#555555"')
    for o in world.collision_obstacles:
        cv.polygon(o.vertices, 'fill="none" stroke="#555555" stroke-dasharray="6,4"')
    if path is not None:
        pts = np.asarray(path, dtype=float)
        for p, q in zip(pts[:-1], pts[1:]):
            cv.line(p, q, 'stroke="black" stroke-width="1" stroke-dasharray="2,3"')
    if states is not None:
        xs = np.asarray(states, dtype=float)
        for t in range(len(xs) - 1):
            colour = PALETTE[int(modes[t]) % len(PALETTE)] if modes is not None else PALETTE[0]
            cv.line(xs[t], xs[t + 1], f'stroke="{colour}" stroke-width="3"')
    for pose, colour in ((world.start, "#2ca02c"), (world.goal, "#d62728")):
        cv.circle(pose, 6.0, f'fill="{colour}"')
        cv.heading(pose, 0.3, f'stroke="{colour}" stroke-width="2"')
    return cv.svg()
