"""Binary image primitives: thinning, exact EDT, junctions, components.

Arrays are ``(height, width)`` bool; pixels outside the image count as
background everywhere.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy import ndimage

from .core import BinaryMask

# Neighbour bit order, clockwise from north: N NE E SE S SW W NW.
_OFFSETS = ((-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1))


def neighbour_codes(a: np.ndarray) -> np.ndarray:
    """8-bit code per pixel; bit k set when neighbour ``_OFFSETS[k]`` is foreground."""
    p = np.pad(a.astype(np.uint8), 1)
    h, w = a.shape
    code = np.zeros((h, w), dtype=np.uint8)
    for k, (dy, dx) in enumerate(_OFFSETS):
        code |= p[1 + dy : 1 + dy + h, 1 + dx : 1 + dx + w] << k
    return code


def _bits(code):
    return [(code >> k) & 1 for k in range(8)]


def _guo_hall_luts():
    first = np.zeros(256, dtype=bool)
    second = np.zeros(256, dtype=bool)
    for code in range(256):
        n, ne, e, se, s, sw, w, nw = _bits(code)
        # number of 8-connected neighbour groups
        c = ((not n) and (ne or e)) + ((not e) and (se or s)) + ((not s) and (sw or w)) + ((not w) and (nw or n))
        n1 = (nw or n) + (ne or e) + (se or s) + (sw or w)
        n2 = (n or ne) + (e or se) + (s or sw) + (w or nw)
        base = c == 1 and 2 <= min(n1, n2) <= 3
        first[code] = base and not ((n or ne or not se) and e)
        second[code] = base and not ((s or sw or not nw) and w)
    return first, second


def _transitions_lut():
    out = np.zeros(256, dtype=np.uint8)
    for code in range(256):
        b = _bits(code)
        out[code] = sum(1 for k in range(8) if not b[k] and b[(k + 1) % 8])
    return out


_GH_FIRST, _GH_SECOND = _guo_hall_luts()
_TRANSITIONS = _transitions_lut()


def _as_array(mask) -> np.ndarray:
    return mask.pixels if isinstance(mask, BinaryMask) else np.asarray(mask, dtype=bool)


def skeletonize(mask) -> BinaryMask:
    """Guo-Hall two-subiteration parallel thinning run to a fixpoint.

    Unlike plain Zhang-Suen it keeps one pixel of an isolated 2x2 block, so
    the 8-connected component count is preserved.
    """
    skel = _as_array(mask).copy()
    while True:
        changed = False
        for lut in (_GH_FIRST, _GH_SECOND):
            drop = skel & lut[neighbour_codes(skel)]
            if drop.any():
                skel &= ~drop
                changed = True
        if not changed:
            return BinaryMask(skel)


@njit(cache=True)
def _edt_sq(fg):
    h, w = fg.shape
    inf = float(h * h + w * w + 1)
    g = np.empty((h, w), dtype=np.float64)
    # column pass: squared vertical distance to nearest background (outside = background)
    for x in range(w):
        d = 1.0
        for y in range(h):
            if fg[y, x]:
                g[y, x] = d
                d += 1.0
            else:
                g[y, x] = 0.0
                d = 1.0
        d = 1.0
        for y in range(h - 1, -1, -1):
            if fg[y, x]:
                if d < g[y, x]:
                    g[y, x] = d
                d += 1.0
            else:
                d = 1.0
        for y in range(h):
            g[y, x] = g[y, x] * g[y, x]
    out = np.empty((h, w), dtype=np.float64)
    # row pass: lower envelope of parabolas; columns -1 and w are background
    n = w + 2
    f = np.empty(n, dtype=np.float64)
    v = np.empty(n, dtype=np.int64)
    z = np.empty(n + 1, dtype=np.float64)
    for y in range(h):
        f[0] = 0.0
        f[n - 1] = 0.0
        for x in range(w):
            f[x + 1] = g[y, x]
        k = 0
        v[0] = 0
        z[0] = -inf
        z[1] = inf
        for q in range(1, n):
            s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            while s <= z[k]:
                k -= 1
                s = ((f[q] + q * q) - (f[v[k]] + v[k] * v[k])) / (2.0 * q - 2.0 * v[k])
            k += 1
            v[k] = q
            z[k] = s
            z[k + 1] = inf
        k = 0
        for q in range(n):
            while z[k + 1] < q:
                k += 1
            if 1 <= q <= w:
                dq = q - v[k]
                out[y, q - 1] = dq * dq + f[v[k]]
    return out


def distance_transform_sq(mask) -> np.ndarray:
    """Exact squared Euclidean distance to the nearest background pixel."""
    a = _as_array(mask)
    if a.size == 0:
        return np.zeros(a.shape)
    sq = _edt_sq(np.ascontiguousarray(a))
    sq[~a] = 0.0
    return sq


def distance_transform(mask) -> np.ndarray:
    """Exact Euclidean distance transform (two-pass lower-envelope method)."""
    return np.sqrt(distance_transform_sq(mask))


def neighbour_groups(skel) -> np.ndarray:
    """Per skeleton pixel, the number of separate neighbour runs around it; 0 off-skeleton."""
    a = _as_array(skel)
    groups = _TRANSITIONS[neighbour_codes(a)].astype(np.int64)
    groups[~a] = 0
    return groups


def branch_points(skeleton) -> list[tuple[int, int]]:
    """Skeleton pixels where three or more separate branches meet, as ``(x, y)``."""
    ys, xs = np.nonzero(neighbour_groups(skeleton) >= 3)
    return list(zip(xs.tolist(), ys.tolist()))


def end_points(skeleton) -> list[tuple[int, int]]:
    ys, xs = np.nonzero(neighbour_groups(skeleton) == 1)
    return list(zip(xs.tolist(), ys.tolist()))


_EIGHT = np.ones((3, 3), dtype=bool)


def components(mask) -> tuple[int, np.ndarray]:
    """8-connected labelling; returns ``(count, labels)`` with background 0."""
    labels, count = ndimage.label(_as_array(mask), structure=_EIGHT)
    return int(count), labels
