"""Domain types shared by every stage of the pipeline.

Coordinates are continuous pixel units with the origin at the top-left
corner; pixel ``(x, y)`` is centred on the integer point ``(x, y)``.  The
growth domain is the half-open rectangle ``[0, width) x [0, height)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np
from PIL import Image


class VasqError(Exception):
    """Base class for all errors raised by this package."""


class ParameterError(VasqError, ValueError):
    pass


class DomainBoundsError(ParameterError):
    pass


class StructuralError(VasqError):
    pass


class PlacementError(VasqError):
    pass


class StateError(VasqError):
    pass


class NoBifurcationError(VasqError):
    pass


class Point2(NamedTuple):
    x: float
    y: float

    @classmethod
    def checked(cls, x: float, y: float) -> "Point2":
        x, y = float(x), float(y)
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParameterError(f"non-finite point ({x}, {y})")
        return cls(x, y)


@dataclass
class GrowthNode:
    id: int
    pos: Point2
    parent: Optional[int] = None
    radius: float = 0.0
    # set when the radius recursion hit RadiusParams.r_max at this node
    clamped: bool = False


@dataclass
class BinaryMask:
    """Foreground/background grid stored as a ``(height, width)`` bool array."""

    pixels: np.ndarray

    def __post_init__(self):
        self.pixels = np.ascontiguousarray(self.pixels, dtype=bool)
        if self.pixels.ndim != 2:
            raise ParameterError("mask must be two-dimensional")

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    def __getitem__(self, xy):
        x, y = xy
        return bool(self.pixels[y, x])

    def count(self) -> int:
        return int(self.pixels.sum())

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.pixels.shape == other.pixels.shape and bool(np.array_equal(self.pixels, other.pixels))

    def save_png(self, path) -> None:
        img = Image.fromarray(np.where(self.pixels, 255, 0).astype(np.uint8), mode="L")
        img.save(path, format="PNG", optimize=False)

    @classmethod
    def load_png(cls, path) -> "BinaryMask":
        with Image.open(path) as img:
            arr = np.asarray(img.convert("L"))
        return cls(arr >= 128)


class VesselForest:
    """A set of rooted trees of growth nodes inside a rectangular domain.

    Node ids are dense and insertion ordered, and a parent always has a
    smaller id than its children, so a reverse scan visits children before
    parents.
    """

    def __init__(self, width: int, height: int):
        if width < 1 or height < 1:
            raise ParameterError(f"invalid domain {width}x{height}")
        self.width = int(width)
        self.height = int(height)
        self.nodes: list[GrowthNode] = []
        self.roots: list[int] = []
        self._children: list[list[int]] = []

    @property
    def domain(self) -> tuple[int, int]:
        return self.width, self.height

    def __len__(self) -> int:
        return len(self.nodes)

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x < self.width and 0.0 <= y < self.height

    def add_node(self, pos, parent: Optional[int] = None) -> int:
        x, y = float(pos[0]), float(pos[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ParameterError(f"non-finite position ({x}, {y})")
        if not self.contains(x, y):
            raise DomainBoundsError(f"position ({x}, {y}) outside {self.width}x{self.height} domain")
        nid = len(self.nodes)
        if parent is not None:
            parent = int(parent)
            if not 0 <= parent < nid:
                raise StructuralError(f"parent {parent} does not exist")
            self._children[parent].append(nid)
        else:
            self.roots.append(nid)
        self.nodes.append(GrowthNode(nid, Point2(x, y), parent))
        self._children.append([])
        return nid

    def children(self, nid: int) -> list[int]:
        return list(self._children[nid])

    def leaves(self) -> list[int]:
        return [i for i, ch in enumerate(self._children) if not ch]

    def bifurcations(self) -> list[tuple[int, list[int]]]:
        return [(i, list(ch)) for i, ch in enumerate(self._children) if len(ch) >= 2]

    def edges(self) -> list[tuple[int, int]]:
        """(parent, child) pairs in child-id order."""
        return [(n.parent, n.id) for n in self.nodes if n.parent is not None]

    def positions(self) -> np.ndarray:
        return np.array([n.pos for n in self.nodes], dtype=float).reshape(-1, 2)

    def radii(self) -> np.ndarray:
        return np.array([n.radius for n in self.nodes], dtype=float)

    def edge_lengths(self) -> np.ndarray:
        out = [math.dist(self.nodes[p].pos, self.nodes[c].pos) for p, c in self.edges()]
        return np.array(out, dtype=float)

    def copy(self) -> "VesselForest":
        other = VesselForest(self.width, self.height)
        other.nodes = [GrowthNode(n.id, n.pos, n.parent, n.radius, n.clamped) for n in self.nodes]
        other.roots = list(self.roots)
        other._children = [list(c) for c in self._children]
        return other

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "nodes": [
                {"id": n.id, "x": n.pos.x, "y": n.pos.y, "parent": n.parent,
                 "radius": n.radius, "clamped": n.clamped}
                for n in self.nodes
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "VesselForest":
        forest = cls(data["width"], data["height"])
        for i, rec in enumerate(data["nodes"]):
            if rec.get("id", i) != i:
                raise StructuralError(f"node ids must be dense and ordered (got {rec.get('id')} at {i})")
            forest.add_node((rec["x"], rec["y"]), rec.get("parent"))
            forest.nodes[i].radius = float(rec.get("radius", 0.0))
            forest.nodes[i].clamped = bool(rec.get("clamped", False))
        return forest

    def __repr__(self):
        return f"VesselForest({self.width}x{self.height}, nodes={len(self.nodes)}, roots={self.roots})"


@dataclass
class AttractorField:
    """Attractor positions plus a parallel liveness flag.

    Attractors only ever die; :meth:`kill` is the single mutation.
    """

    points: np.ndarray
    alive: np.ndarray = field(default=None)

    def __post_init__(self):
        self.points = np.asarray(self.points, dtype=float).reshape(-1, 2)
        if self.alive is None:
            self.alive = np.ones(len(self.points), dtype=bool)
        else:
            self.alive = np.asarray(self.alive, dtype=bool).copy()
        if self.alive.shape != (len(self.points),):
            raise ParameterError("points and alive must have equal length")
        if not np.all(np.isfinite(self.points)):
            raise ParameterError("attractor coordinates must be finite")

    def __len__(self) -> int:
        return len(self.points)

    def live_count(self) -> int:
        return int(self.alive.sum())

    def kill(self, indices) -> None:
        self.alive[np.asarray(indices, dtype=np.intp)] = False

    def copy(self) -> "AttractorField":
        return AttractorField(self.points.copy(), self.alive.copy())

    @classmethod
    def concat(cls, *fields: "AttractorField") -> "AttractorField":
        pts = np.concatenate([f.points for f in fields]) if fields else np.zeros((0, 2))
        alive = np.concatenate([f.alive for f in fields]) if fields else np.zeros(0, bool)
        return cls(pts, alive)


@dataclass
class GrowthParams:
    Da: float = 20.0
    Dk: float = 10.0
    Ls: float = 15.0
    N_max: int = 2000
    T_max: int = 500
    per_attractor_normalize: bool = False
    # classic SCA: each attractor only pulls its nearest node
    nearest_only: bool = False
    obstacle: Optional[BinaryMask] = None

    def __post_init__(self):
        if not (self.Da > 0 and self.Dk > 0 and self.Ls > 0):
            raise ParameterError("Da, Dk and Ls must be positive")
        if not self.Dk < self.Da:
            raise ParameterError(f"Dk ({self.Dk}) must be smaller than Da ({self.Da})")
        if self.N_max < 1 or self.T_max < 1:
            raise ParameterError("N_max and T_max must be >= 1")


@dataclass
class PlacementParams:
    strategy: str = "grid_jitter"
    roots: list = field(default_factory=list)
    count: int = 500
    cell: int = 20
    jitter: Optional[float] = None
    vessel_stride: int = 4
    reference_mask: Optional[BinaryMask] = None
    seed: int = 0

    STRATEGIES = ("uniform", "grid_jitter", "real_conditioned")

    def __post_init__(self):
        if self.strategy not in self.STRATEGIES:
            raise ParameterError(f"unknown placement strategy {self.strategy!r}")
        self.roots = [Point2.checked(*r) for r in self.roots]
        if self.jitter is None:
            self.jitter = self.cell / 2
        if self.strategy == "real_conditioned" and self.reference_mask is None:
            raise ParameterError("real_conditioned placement needs a reference_mask")

    @property
    def effective_jitter(self) -> float:
        return float(self.jitter)


@dataclass
class RadiusParams:
    r_tip: float = 1.0
    gamma: float = 2.0
    r_max: float = 12.0

    def __post_init__(self):
        if not (self.r_tip > 0 and self.gamma > 0 and self.r_max > 0):
            raise ParameterError("r_tip, gamma and r_max must be positive")
        if self.r_tip > self.r_max:
            raise ParameterError("r_tip must not exceed r_max")


@dataclass
class RasterParams:
    width: int = 512
    height: int = 512
    supersample: int = 2

    def __post_init__(self):
        if self.supersample not in (1, 2, 4):
            raise ParameterError("supersample must be 1, 2 or 4")
        if self.width < 1 or self.height < 1:
            raise ParameterError("image size must be positive")


def pixel_of(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """Pixel whose unit square (centred on integers) contains ``(x, y)``."""
    px = min(max(int(math.floor(x + 0.5)), 0), width - 1)
    py = min(max(int(math.floor(y + 0.5)), 0), height - 1)
    return px, py


def in_obstacle(obstacle: Optional[BinaryMask], x: float, y: float) -> bool:
    if obstacle is None:
        return False
    px, py = pixel_of(x, y, obstacle.width, obstacle.height)
    return bool(obstacle.pixels[py, px])


def load_forest(path) -> VesselForest:
    import json

    return VesselForest.from_dict(json.loads(Path(path).read_text()))
