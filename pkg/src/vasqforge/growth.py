"""Space colonization growth loop.

Each iteration every node with live attractors inside the attraction
distance ``Da`` sprouts one child ``Ls`` pixels along the normalized sum of
the node-to-attractor vectors; afterwards every attractor within the kill
distance ``Dk`` of a new node dies.  Growth stops at ``N_max`` nodes,
``T_max`` iterations, or the first iteration that adds nothing.

Neighbour queries run against a uniform hash grid by default.  The
``brute`` switch replaces it with a dense all-pairs computation; both feed
the same pair list into the same update, so the two produce identical
forests.
"""

from __future__ import annotations

import math
from typing import Optional

import numpy as np

from .core import AttractorField, GrowthParams, VesselForest, in_obstacle

DEGENERATE_NORM = 1e-12
DUPLICATE_TOL = 1e-6


class AttractorGrid:
    """Uniform hash grid over static attractor positions (CSR layout)."""

    def __init__(self, points: np.ndarray, cell: float, extent=(0.0, 0.0)):
        self.points = points
        self.cell = float(cell)
        lo = np.minimum(points.min(axis=0), 0.0) if len(points) else np.zeros(2)
        hi = np.maximum(points.max(axis=0), extent) if len(points) else np.asarray(extent, float)
        self.origin = lo
        self.nx, self.ny = (np.floor((hi - lo) / self.cell).astype(int) + 1).tolist()
        cid = self._cell_ids(points)
        self.order = np.argsort(cid, kind="stable")
        ncell = self.nx * self.ny
        sorted_ids = cid[self.order]
        self.starts = np.searchsorted(sorted_ids, np.arange(ncell), side="left")
        self.ends = np.searchsorted(sorted_ids, np.arange(ncell), side="right")

    def _cells(self, xy):
        c = np.floor((xy - self.origin) / self.cell).astype(np.int64)
        return c[:, 0], c[:, 1]

    def _cell_ids(self, xy):
        cx, cy = self._cells(xy)
        return cy * self.nx + cx

    def candidates(self, xy: np.ndarray, radius: float):
        """(query row, attractor index) pairs whose cells lie within ``radius``."""
        ring = max(1, int(math.ceil(radius / self.cell)))
        cx, cy = self._cells(xy)
        rows = np.arange(len(xy))
        qs, starts, counts = [], [], []
        for dy in range(-ring, ring + 1):
            for dx in range(-ring, ring + 1):
                ncx, ncy = cx + dx, cy + dy
                ok = (ncx >= 0) & (ncx < self.nx) & (ncy >= 0) & (ncy < self.ny)
                cid = ncy[ok] * self.nx + ncx[ok]
                s, e = self.starts[cid], self.ends[cid]
                qs.append(rows[ok])
                starts.append(s)
                counts.append(e - s)
        q = np.concatenate(qs)
        s = np.concatenate(starts)
        n = np.concatenate(counts)
        total = int(n.sum())
        if total == 0:
            return np.zeros(0, np.intp), np.zeros(0, np.intp)
        first = np.cumsum(n) - n
        within = np.arange(total) - np.repeat(first, n)
        slot = np.repeat(s, n) + within
        return np.repeat(q, n), self.order[slot]


def _pairs_within(qxy, qids, field: AttractorField, radius: float, grid: Optional[AttractorGrid]):
    """Sorted (query id, attractor index, squared distance) with dist <= radius among live attractors."""
    pts = field.points
    r2 = radius * radius
    if grid is None:
        live = np.flatnonzero(field.alive)
        if len(qids) == 0 or len(live) == 0:
            return np.zeros(0, np.intp), np.zeros(0, np.intp), np.zeros(0)
        dx = pts[live, 0][None, :] - qxy[:, 0][:, None]
        dy = pts[live, 1][None, :] - qxy[:, 1][:, None]
        d2 = dx * dx + dy * dy
        row, col = np.nonzero(d2 <= r2)
        return qids[row], live[col], d2[row, col]
    row, attr = grid.candidates(qxy, radius)
    keep = field.alive[attr]
    row, attr = row[keep], attr[keep]
    dx = pts[attr, 0] - qxy[row, 0]
    dy = pts[attr, 1] - qxy[row, 1]
    d2 = dx * dx + dy * dy
    hit = d2 <= r2
    nid, attr, d2 = qids[row[hit]], attr[hit], d2[hit]
    order = np.lexsort((attr, nid))
    return nid[order], attr[order], d2[order]


def _directions(node_xy, starts, attr_xy, per_attractor_normalize):
    """Summed attractor vectors per group; ``starts`` are group offsets into attr_xy."""
    v = attr_xy - node_xy
    if per_attractor_normalize:
        n = np.hypot(v[:, 0], v[:, 1])
        nz = n > 0
        v = np.where(nz[:, None], v / np.where(nz, n, 1.0)[:, None], 0.0)
    return np.add.reduceat(v, starts, axis=0)


def growth_direction(node_pos, attractor_positions, per_attractor_normalize: bool = False):
    """Unit growth direction for one node, or ``None`` when the vectors cancel."""
    a = np.asarray(attractor_positions, dtype=float).reshape(-1, 2)
    p = np.asarray(node_pos, dtype=float).reshape(1, 2)
    s = _directions(np.repeat(p, len(a), axis=0), np.array([0]), a, per_attractor_normalize)[0]
    norm = math.hypot(s[0], s[1])
    if norm < DEGENERATE_NORM:
        return None
    return (s[0] / norm, s[1] / norm)


def influenced_nodes(forest: VesselForest, field: AttractorField, Da: float, brute: bool = False):
    """Map node id -> ascending live attractor indices within ``Da``."""
    if Da <= 0:
        raise ValueError("Da must be positive")
    xy = forest.positions()
    ids = np.arange(len(xy))
    grid = None if brute else AttractorGrid(field.points, Da, forest.domain)
    nid, attr, _ = _pairs_within(xy, ids, field, Da, grid)
    out: dict[int, list[int]] = {}
    for n, a in zip(nid.tolist(), attr.tolist()):
        out.setdefault(n, []).append(a)
    return out


class Grower:
    """Stateful driver for one growth run.

    Keeps the attractor grid, a coarse node index for the duplicate guard,
    and the set of nodes that can still be influenced.  A node with no live
    attractor in range can never regain one (attractors only die), so only
    nodes influenced last iteration plus new nodes are re-queried.  The brute
    mode re-queries every node against every live attractor.
    """

    def __init__(self, forest: VesselForest, field: AttractorField, params: GrowthParams, brute: bool = False):
        self.forest = forest
        self.field = field
        self.params = params
        self.brute = brute
        self.grid = None if brute else AttractorGrid(field.points, max(params.Da, params.Dk), forest.domain)
        self._xs = [n.pos.x for n in forest.nodes]
        self._ys = [n.pos.y for n in forest.nodes]
        self._bucket_size = params.Ls
        self._buckets: dict[tuple[int, int], list[int]] = {}
        for i in range(len(forest)):
            self._bucket_add(i)
        self.active = set(range(len(forest)))

    def _bucket_key(self, x, y):
        return int(math.floor(x / self._bucket_size)), int(math.floor(y / self._bucket_size))

    def _bucket_add(self, i):
        self._buckets.setdefault(self._bucket_key(self._xs[i], self._ys[i]), []).append(i)

    def _is_duplicate(self, x, y):
        bx, by = self._bucket_key(x, y)
        tol2 = DUPLICATE_TOL * DUPLICATE_TOL
        for kx in (bx - 1, bx, bx + 1):
            for ky in (by - 1, by, by + 1):
                for j in self._buckets.get((kx, ky), ()):
                    dx, dy = self._xs[j] - x, self._ys[j] - y
                    if dx * dx + dy * dy <= tol2:
                        return True
        return False

    def _query(self, ids, radius):
        ids = np.asarray(ids, dtype=np.intp)
        xy = np.column_stack([np.take(self._xs, ids), np.take(self._ys, ids)]) if len(ids) else np.zeros((0, 2))
        return _pairs_within(xy, ids, self.field, radius, self.grid)

    def kill_near(self, ids) -> int:
        """Kill live attractors within ``Dk`` of the given nodes; returns the number killed."""
        if len(ids) == 0:
            return 0
        _, attr, _ = self._query(ids, self.params.Dk)
        attr = np.unique(attr)
        self.field.kill(attr)
        return len(attr)

    def step(self) -> bool:
        p = self.params
        forest = self.forest
        if len(forest) >= p.N_max:
            return False
        query_ids = range(len(forest)) if self.brute else sorted(self.active)
        nid, attr, d2 = self._query(list(query_ids), p.Da)
        if p.nearest_only and len(nid):
            # each attractor keeps only its nearest node (ties -> lowest id)
            o = np.lexsort((nid, d2, attr))
            nid, attr = nid[o], attr[o]
            _, first = np.unique(attr, return_index=True)
            nid, attr = nid[first], attr[first]
            o = np.lexsort((attr, nid))
            nid, attr = nid[o], attr[o]
        self.active = set(np.unique(nid).tolist())
        if len(nid) == 0:
            return False

        groups, starts = np.unique(nid, return_index=True)
        node_xy = np.column_stack([np.take(self._xs, nid), np.take(self._ys, nid)])
        sums = _directions(node_xy, starts, self.field.points[attr], p.per_attractor_normalize)

        added = []
        for g, (sx, sy) in zip(groups.tolist(), sums.tolist()):
            if len(forest) >= p.N_max:
                break
            norm = math.hypot(sx, sy)
            if norm < DEGENERATE_NORM:
                continue
            x = self._xs[g] + p.Ls * (sx / norm)
            y = self._ys[g] + p.Ls * (sy / norm)
            if not forest.contains(x, y) or in_obstacle(p.obstacle, x, y) or self._is_duplicate(x, y):
                continue
            i = forest.add_node((x, y), g)
            self._xs.append(x)
            self._ys.append(y)
            self._bucket_add(i)
            added.append(i)

        self.kill_near(added)
        self.active.update(added)
        return bool(added)

    def grow(self) -> int:
        p = self.params
        self.kill_near(list(range(len(self.forest))))
        t = 0
        while len(self.forest) < p.N_max and t < p.T_max:
            if not self.step():
                break
            t += 1
        return t


def step(forest: VesselForest, field: AttractorField, params: GrowthParams, brute: bool = False) -> bool:
    """One growth iteration; returns True iff at least one node was added."""
    return Grower(forest, field, params, brute=brute).step()


def grow(forest: VesselForest, field: AttractorField, params: GrowthParams, brute: bool = False) -> int:
    """Grow until a termination condition holds; returns the number of growing iterations."""
    return Grower(forest, field, params, brute=brute).grow()
