import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vasqforge.core import ParameterError, RadiusParams, RasterParams, StateError, VesselForest
from vasqforge.morphology import components
from vasqforge.radius import assign_radii
from vasqforge.raster import rasterize, render_skeleton


def seg_dist(px, py, ax, ay, bx, by):
    """Distance from a point to a segment, and the segment parameter of the closest point."""
    vx, vy = bx - ax, by - ay
    L2 = vx * vx + vy * vy
    t = 0.0 if L2 == 0 else min(1.0, max(0.0, ((px - ax) * vx + (py - ay) * vy) / L2))
    return math.hypot(px - (ax + t * vx), py - (ay + t * vy)), t


def primitives(forest):
    """(parent, child) pairs; an isolated root is paired with itself."""
    for n in forest.nodes:
        if n.parent is not None:
            yield forest.nodes[n.parent], n
        elif not forest.children(n.id):
            yield n, n


def signed_distance(forest, x, y):
    phi = math.inf
    for p, n in primitives(forest):
        d, t = seg_dist(x, y, p.pos.x, p.pos.y, n.pos.x, n.pos.y)
        phi = min(phi, d - (p.radius + t * (n.radius - p.radius)))
    return phi


def oracle_mask(forest, w, h):
    out = np.zeros((h, w), bool)
    for y in range(h):
        for x in range(w):
            out[y, x] = signed_distance(forest, x, y) <= 0
    return out


def test_single_disc():
    f = VesselForest(21, 21)
    f.add_node((10, 10))
    f.nodes[0].radius = 3
    m = rasterize(f, RasterParams(21, 21, 1))
    assert m[10, 10] and m[10, 13] and not m[10, 14]
    assert np.array_equal(m.pixels, oracle_mask(f, 21, 21))


def test_empty_forest():
    assert rasterize(VesselForest(8, 8), RasterParams(8, 8, 1)).count() == 0
    assert render_skeleton(VesselForest(8, 8)).count() == 0


def test_horizontal_edge_matches_distance_oracle():
    f = VesselForest(32, 21)
    f.add_node((0, 10))
    f.add_node((15, 10), 0)
    for n in f.nodes:
        n.radius = 1.0
    m = rasterize(f, RasterParams(32, 21, 1))
    expect = np.zeros((21, 32), bool)
    for y in range(21):
        for x in range(32):
            expect[y, x] = seg_dist(x, y, 0, 10, 15, 10)[0] <= 1
    assert np.array_equal(m.pixels, expect)


def test_errors():
    f = VesselForest(16, 16)
    f.add_node((3, 3))
    with pytest.raises(StateError):
        rasterize(f, RasterParams(16, 16, 1))
    f.nodes[0].radius = 1
    with pytest.raises(ParameterError):
        rasterize(f, RasterParams(8, 16, 1))


def random_radius_forest(rng, n, w=40, h=40, r_tip=1.0):
    f = VesselForest(w, h)
    f.add_node((rng.uniform(5, w - 5), rng.uniform(5, h - 5)))
    for i in range(1, n):
        p = int(rng.integers(0, i))
        ang = rng.uniform(0, 2 * math.pi)
        px, py = f.nodes[p].pos
        x = min(max(px + 6 * math.cos(ang), 0), w - 1)
        y = min(max(py + 6 * math.sin(ang), 0), h - 1)
        f.add_node((x, y), p)
    return assign_radii(f, RadiusParams(r_tip=r_tip, r_max=4))


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 12), st.integers(0, 2**32 - 1))
def test_tapered_capsules_match_oracle(n, seed):
    rng = np.random.default_rng(seed)
    f = random_radius_forest(rng, n, w=30, h=30)
    assert np.array_equal(rasterize(f, RasterParams(30, 30, 1)).pixels, oracle_mask(f, 30, 30))


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 25), st.integers(0, 2**32 - 1), st.sampled_from([2, 4]))
def test_supersampling_only_changes_edge_pixels(n, seed, ss):
    rng = np.random.default_rng(seed)
    f = random_radius_forest(rng, n)
    base = rasterize(f, RasterParams(40, 40, 1)).pixels
    fine = rasterize(f, RasterParams(40, 40, ss)).pixels
    ys, xs = np.nonzero(base != fine)
    for x, y in zip(xs, ys):
        assert abs(signed_distance(f, x, y)) < 1.0


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4]))
def test_skeleton_inside_mask(n, seed, ss):
    rng = np.random.default_rng(seed)
    f = random_radius_forest(rng, n, r_tip=1.0)
    m = rasterize(f, RasterParams(40, 40, ss)).pixels
    sk = render_skeleton(f).pixels
    assert not np.any(sk & ~m)
    # each tree's centreline stays in one 8-connected piece
    assert components(sk)[0] == 1


def test_rasterize_deterministic():
    rng = np.random.default_rng(5)
    f = random_radius_forest(rng, 20)
    a = rasterize(f, RasterParams(40, 40, 4))
    b = rasterize(f.copy(), RasterParams(40, 40, 4))
    assert a == b


def line_forest(p, q):
    f = VesselForest(16, 16)
    f.add_node(p)
    f.add_node(q, 0)
    return f


def test_skeleton_diagonal():
    sk = render_skeleton(line_forest((0, 0), (3, 3)))
    assert sorted(zip(*np.nonzero(sk.pixels.T))) == [(0, 0), (1, 1), (2, 2), (3, 3)]


def test_skeleton_shallow_line():
    sk = render_skeleton(line_forest((0, 0), (4, 2))).pixels
    xs = [x for x in range(16) for y in range(16) if sk[y, x]]
    pts = sorted((x, y) for x in range(16) for y in range(16) if sk[y, x])
    assert len(pts) == 5 and pts[0] == (0, 0) and pts[-1] == (4, 2)
    # one pixel per column, consecutive pixels 8-adjacent
    assert sorted(xs) == [0, 1, 2, 3, 4]
    for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
        assert max(abs(x1 - x0), abs(y1 - y0)) == 1
