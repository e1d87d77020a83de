"""Forest to binary mask rendering."""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .core import BinaryMask, ParameterError, RasterParams, StateError, VesselForest, pixel_of


@njit(cache=True)
def _stamp_capsules(hi, s, ax, ay, bx, by, ra, rb):
    """OR tapered capsules into the supersampled grid ``hi``.

    A sample q is inside capsule k when its distance to the closest segment
    point a + t(b - a) is at most ra + t(rb - ra).  Sample i sits at
    (i + 0.5) / s - 0.5 in pixel coordinates.
    """
    H, W = hi.shape
    for k in range(len(ax)):
        x_a, y_a, x_b, y_b = ax[k], ay[k], bx[k], by[k]
        r_a, r_b = ra[k], rb[k]
        rmax = max(r_a, r_b)
        i0 = max(int(math.ceil((min(x_a, x_b) - rmax + 0.5) * s - 0.5)), 0)
        i1 = min(int(math.floor((max(x_a, x_b) + rmax + 0.5) * s - 0.5)), W - 1)
        j0 = max(int(math.ceil((min(y_a, y_b) - rmax + 0.5) * s - 0.5)), 0)
        j1 = min(int(math.floor((max(y_a, y_b) + rmax + 0.5) * s - 0.5)), H - 1)
        dx, dy = x_b - x_a, y_b - y_a
        L2 = dx * dx + dy * dy
        for j in range(j0, j1 + 1):
            qy = (j + 0.5) / s - 0.5
            for i in range(i0, i1 + 1):
                if hi[j, i]:
                    continue
                qx = (i + 0.5) / s - 0.5
                t = 0.0
                if L2 > 0:
                    t = ((qx - x_a) * dx + (qy - y_a) * dy) / L2
                    t = min(max(t, 0.0), 1.0)
                ex = qx - (x_a + t * dx)
                ey = qy - (y_a + t * dy)
                r = r_a + t * (r_b - r_a)
                if ex * ex + ey * ey <= r * r:
                    hi[j, i] = True


def rasterize(forest: VesselForest, params: RasterParams | None = None) -> BinaryMask:
    """Render every edge as a tapered capsule; isolated nodes become discs.

    A pixel is foreground when at least half of its ``supersample**2``
    sub-samples are covered.
    """
    params = params or RasterParams(forest.width, forest.height)
    if params.width < forest.width or params.height < forest.height:
        raise ParameterError(
            f"image {params.width}x{params.height} smaller than domain {forest.width}x{forest.height}"
        )
    if len(forest) and any(n.radius <= 0 for n in forest.nodes):
        raise StateError("radii have not been assigned")
    s = params.supersample
    hi = np.zeros((params.height * s, params.width * s), dtype=bool)
    segs = []
    nodes = forest.nodes
    for node in nodes:
        if node.parent is not None:
            p = nodes[node.parent]
            segs.append((p.pos.x, p.pos.y, node.pos.x, node.pos.y, p.radius, node.radius))
        elif not forest._children[node.id]:
            segs.append((node.pos.x, node.pos.y, node.pos.x, node.pos.y, node.radius, node.radius))
    if segs:
        cols = np.array(segs, dtype=np.float64).T.copy()
        _stamp_capsules(hi, s, *cols)
    if s == 1:
        return BinaryMask(hi)
    cover = hi.reshape(params.height, s, params.width, s).sum(axis=(1, 3))
    return BinaryMask(cover * 2 >= s * s)


def _round(v: float) -> int:
    return int(math.floor(v + 0.5))


def line_pixels(x0: float, y0: float, x1: float, y1: float) -> list[tuple[int, int]]:
    """8-connected DDA line between real endpoints.

    Steps one pixel at a time along the major axis and rounds the exact
    line on the minor axis, so every pixel centre is within half a pixel of
    the true line.
    """
    steep = abs(y1 - y0) > abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    a, b = _round(x0), _round(x1)
    step = 1 if b >= a else -1
    slope = (y1 - y0) / (x1 - x0) if x1 != x0 else 0.0
    out = []
    for u in range(a, b + step, step):
        v = _round(y0 + (u - x0) * slope)
        out.append((v, u) if steep else (u, v))
    return out


def render_skeleton(forest: VesselForest, width: int | None = None, height: int | None = None) -> BinaryMask:
    """One-pixel centreline of every edge plus every node pixel."""
    width = forest.width if width is None else width
    height = forest.height if height is None else height
    mask = np.zeros((height, width), dtype=bool)
    nodes = forest.nodes
    for node in nodes:
        px, py = pixel_of(node.pos.x, node.pos.y, width, height)
        mask[py, px] = True
        if node.parent is not None:
            p = nodes[node.parent].pos
            for x, y in line_pixels(p.x, p.y, node.pos.x, node.pos.y):
                if 0 <= x < width and 0 <= y < height:
                    mask[y, x] = True
    return BinaryMask(mask)
