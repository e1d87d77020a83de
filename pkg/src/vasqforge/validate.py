"""Murray's-law compliance, overlap metrics and structural statistics."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
from scipy import sparse
from scipy.sparse import csgraph

from .core import BinaryMask, NoBifurcationError, ParameterError, VesselForest
from .morphology import (
    _OFFSETS,
    distance_transform,
    neighbour_groups,
    skeletonize,
)


@dataclass
class Bifurcation:
    location: tuple
    r0: float
    children: list
    mr: float
    deviation: float
    clamped: bool = False


@dataclass
class MurrayReport:
    per_bifurcation: list
    mean_deviation: float
    compliance_score: float
    gamma: float
    n_used: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["n_bifurcations"] = len(self.per_bifurcation)
        return d


@dataclass
class MetricsReport:
    dsc: float
    cl_dice: float
    t_prec: float
    t_sens: float


@dataclass
class StructuralStats:
    vessel_density: float
    branch_count: int
    endpoint_count: int
    mean_tortuosity: float
    mean_radius: float


def murray_ratio(r0: float, children, gamma: float = 2.0) -> float:
    if r0 <= 0:
        raise ParameterError(f"parent radius must be positive, got {r0}")
    children = list(children)
    if not children or any(r <= 0 for r in children):
        raise ParameterError("child radii must be a non-empty list of positive values")
    return sum(r**gamma for r in children) / r0**gamma


def compliance_score(deviations) -> float:
    deviations = list(deviations)
    if not deviations:
        raise NoBifurcationError("no bifurcations to score")
    if any(d < 0 for d in deviations):
        raise ParameterError("deviations must be non-negative")
    return 1.0 / (1.0 + sum(deviations) / len(deviations))


def _report(entries: list[Bifurcation], gamma: float, exclude_clamped: bool = True) -> MurrayReport:
    devs = [b.deviation for b in entries if not (b.clamped and exclude_clamped)]
    if not devs:
        raise NoBifurcationError("no usable bifurcations")
    mean_dev = sum(devs) / len(devs)
    return MurrayReport(entries, mean_dev, 1.0 / (1.0 + mean_dev), gamma, len(devs))


def murray_tree(forest: VesselForest, gamma: float = 2.0, exclude_clamped: bool = True) -> MurrayReport:
    """Score every bifurcation of a radius-assigned forest.

    Bifurcations whose parent radius was capped are listed with
    ``clamped=True``; they are left out of the mean unless
    ``exclude_clamped`` is false.
    """
    entries = []
    nodes = forest.nodes
    for nid, kids in forest.bifurcations():
        r0 = nodes[nid].radius
        rc = [nodes[k].radius for k in kids]
        mr = murray_ratio(r0, rc, gamma)
        entries.append(Bifurcation(tuple(nodes[nid].pos), r0, rc, mr, abs(1.0 - mr), nodes[nid].clamped))
    if not entries:
        raise NoBifurcationError("forest has no bifurcations")
    return _report(entries, gamma, exclude_clamped)


def _ring(skel, x, y):
    h, w = skel.shape
    out = []
    for dy, dx in _OFFSETS:
        nx, ny = x + dx, y + dy
        out.append((nx, ny) if 0 <= nx < w and 0 <= ny < h and skel[ny, nx] else None)
    return out


def _runs(ring):
    """Maximal cyclic runs of occupied ring slots."""
    if all(p is not None for p in ring):
        return [list(ring)]
    start = next(i for i in range(8) if ring[i] is None)
    runs, cur = [], []
    for k in range(1, 9):
        p = ring[(start + k) % 8]
        if p is None:
            if cur:
                runs.append(cur)
            cur = []
        else:
            cur.append(p)
    return runs


def _walk(skel, groups, bp, start, visited, k):
    """Follow one branch ``k`` pixels out from a junction; None if it ends or forks first."""
    bx, by = bp
    cur = start
    for _ in range(k - 1):
        cand = [p for p in _ring(skel, *cur) if p is not None and p not in visited]
        if not cand or any(groups[p[1], p[0]] >= 3 for p in cand):
            return None
        if len(cand) > 1:
            for i, p in enumerate(cand):
                if not any(max(abs(p[0] - q[0]), abs(p[1] - q[1])) == 1 for q in cand[:i] + cand[i + 1 :]):
                    return None
        visited.update(cand)
        cur = max(cand, key=lambda p: (p[0] - bx) ** 2 + (p[1] - by) ** 2)
    return cur


def murray_mask(mask: BinaryMask, gamma: float = 2.0, offset_k: int = 3) -> MurrayReport:
    """Murray compliance measured on a binary vessel mask.

    At each skeleton junction every incident branch is followed ``offset_k``
    pixels outward and the distance transform there is taken as that
    branch's radius.  The widest branch is treated as the parent.
    Junctions with fewer than three usable branches are skipped.
    """
    if offset_k < 1:
        raise ParameterError("offset_k must be >= 1")
    skel = skeletonize(mask).pixels
    dt = distance_transform(mask)
    groups = neighbour_groups(skel)
    ys, xs = np.nonzero(groups >= 3)
    if len(xs) == 0:
        raise NoBifurcationError("mask skeleton has no branch points")
    entries = []
    for x, y in zip(xs.tolist(), ys.tolist()):
        ring = _ring(skel, x, y)
        visited = {(x, y)} | {p for p in ring if p is not None}
        radii = []
        for run in _runs(ring):
            orth = [p for p in run if p[0] == x or p[1] == y]
            start = (orth or run)[0]
            if groups[start[1], start[0]] >= 3:
                continue
            end = _walk(skel, groups, (x, y), start, visited, offset_k)
            if end is not None:
                radii.append(float(dt[end[1], end[0]]))
        if len(radii) < 3:
            continue
        radii.sort(reverse=True)
        r0, kids = radii[0], radii[1:]
        mr = murray_ratio(r0, kids, gamma)
        entries.append(Bifurcation((x, y), r0, kids, mr, abs(1.0 - mr)))
    if not entries:
        raise NoBifurcationError("no branch point had three resolvable branches")
    return _report(entries, gamma)


def _pair(pred, gt):
    p = pred.pixels if isinstance(pred, BinaryMask) else np.asarray(pred, bool)
    g = gt.pixels if isinstance(gt, BinaryMask) else np.asarray(gt, bool)
    if p.shape != g.shape:
        raise ParameterError(f"dimension mismatch {p.shape} vs {g.shape}")
    return p, g


def dice(pred, gt) -> float:
    p, g = _pair(pred, gt)
    total = int(p.sum()) + int(g.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((p & g).sum()) / total


def cl_dice(pred, gt) -> MetricsReport:
    p, g = _pair(pred, gt)
    sp = skeletonize(p).pixels
    sg = skeletonize(g).pixels
    n_sp, n_sg = int(sp.sum()), int(sg.sum())
    if n_sp == 0 and n_sg == 0:
        return MetricsReport(dice(p, g), 1.0, 1.0, 1.0)
    t_prec = int((sp & g).sum()) / n_sp if n_sp else 0.0
    t_sens = int((sg & p).sum()) / n_sg if n_sg else 0.0
    cl = 2.0 * t_prec * t_sens / (t_prec + t_sens) if t_prec > 0 and t_sens > 0 else 0.0
    return MetricsReport(dice(p, g), cl, t_prec, t_sens)


def _segment_tortuosity(seg: np.ndarray) -> list[float]:
    """Arc/chord ratio of each 8-connected piece of ``seg``.

    Arc length is the geodesic (1 / sqrt 2 step) distance from the piece's
    lowest-degree pixel to the pixel farthest from it along the piece.
    """
    ys, xs = np.nonzero(seg)
    n = len(xs)
    if n == 0:
        return []
    index = -np.ones(seg.shape, dtype=np.int64)
    index[ys, xs] = np.arange(n)
    h, w = seg.shape
    rows, cols, wts = [], [], []
    for dy, dx in ((0, 1), (1, -1), (1, 0), (1, 1)):
        nx, ny = xs + dx, ys + dy
        ok = (nx >= 0) & (nx < w) & (ny < h)
        a = np.flatnonzero(ok)
        b = index[ny[ok], nx[ok]]
        keep = b >= 0
        rows.append(a[keep])
        cols.append(b[keep])
        wts.append(np.full(keep.sum(), math.sqrt(2.0) if dx and dy else 1.0))
    r, c, wt = np.concatenate(rows), np.concatenate(cols), np.concatenate(wts)
    graph = sparse.coo_matrix((np.concatenate([wt, wt]), (np.concatenate([r, c]), np.concatenate([c, r]))),
                              shape=(n, n)).tocsr()
    degree = np.diff(graph.indptr)
    _, label = csgraph.connected_components(graph, directed=False)
    # one source per piece: its minimum-degree pixel (first in raster order on ties)
    order = np.lexsort((np.arange(n), degree, label))
    _, first = np.unique(label[order], return_index=True)
    sources = order[first]
    dist = csgraph.dijkstra(graph, directed=False, indices=sources, min_only=True)
    out = []
    for lab, src in enumerate(sources):
        members = np.flatnonzero(label == lab)
        far = members[np.argmax(dist[members])]
        chord = math.hypot(xs[far] - xs[src], ys[far] - ys[src])
        if chord > 0:
            out.append(max(float(dist[far]) / chord, 1.0))
    return out


def structural_stats(mask) -> StructuralStats:
    a = mask.pixels if isinstance(mask, BinaryMask) else np.asarray(mask, bool)
    if a.size == 0 or not a.any():
        return StructuralStats(0.0, 0, 0, 1.0, 0.0)
    skel = skeletonize(a).pixels
    groups = neighbour_groups(skel)
    junction = groups >= 3
    tort = _segment_tortuosity(skel & ~junction)
    dt = distance_transform(a)
    return StructuralStats(
        vessel_density=float(a.mean()),
        branch_count=int(junction.sum()),
        endpoint_count=int((groups == 1).sum()),
        mean_tortuosity=float(np.mean(tort)) if tort else 1.0,
        mean_radius=float(dt[skel].mean()),
    )
