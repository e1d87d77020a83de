"""Initial attractor fields and root nodes."""

from __future__ import annotations

import numpy as np

from .core import (
    AttractorField,
    BinaryMask,
    ParameterError,
    PlacementError,
    PlacementParams,
    Point2,
    in_obstacle,
)


def make_rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


def derive_seed(master_seed: int, index: int) -> int:
    """64-bit per-item seed that depends only on ``(master_seed, index)``."""
    ss = np.random.SeedSequence(entropy=int(master_seed), spawn_key=(int(index),))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def place_uniform(domain, count: int, obstacle: BinaryMask | None = None, seed: int = 0) -> AttractorField:
    """Draw ``count`` attractors uniformly over the free pixels of the domain.

    A free pixel is chosen uniformly, then the point is placed uniformly
    inside that pixel's unit square (clipped to the domain).
    """
    width, height = domain
    if count < 1:
        raise ParameterError("count must be >= 1")
    free = np.ones((height, width), dtype=bool)
    if obstacle is not None:
        free &= ~_fit(obstacle.pixels, width, height)
    ys, xs = np.nonzero(free)
    if len(xs) == 0:
        raise PlacementError("obstacle covers the whole domain")
    rng = make_rng(seed)
    pick = rng.integers(0, len(xs), size=count)
    u = rng.random((count, 2))
    px, py = xs[pick].astype(float), ys[pick].astype(float)
    lo_x, hi_x = np.maximum(px - 0.5, 0.0), np.minimum(px + 0.5, width)
    lo_y, hi_y = np.maximum(py - 0.5, 0.0), np.minimum(py + 0.5, height)
    x = lo_x + u[:, 0] * (hi_x - lo_x)
    y = lo_y + u[:, 1] * (hi_y - lo_y)
    return AttractorField(np.column_stack([x, y]))


def _fit(pixels: np.ndarray, width: int, height: int) -> np.ndarray:
    """Crop or zero-pad ``pixels`` to ``(height, width)``."""
    out = np.zeros((height, width), dtype=bool)
    h, w = min(height, pixels.shape[0]), min(width, pixels.shape[1])
    out[:h, :w] = pixels[:h, :w]
    return out


def _check_grid(domain, cell, jitter):
    width, height = domain
    if not 1 <= cell <= min(width, height):
        raise ParameterError(f"cell must be in [1, {min(width, height)}], got {cell}")
    if not 0 <= jitter <= cell / 2:
        raise ParameterError(f"jitter must be in [0, cell/2={cell / 2}], got {jitter}")


def _jittered_cells(cells_x, cells_y, cell, jitter, rng):
    # half-open uniform keeps each point inside [x0, x0 + cell)
    n = len(cells_x)
    off = rng.uniform(-jitter, jitter, size=(n, 2)) if jitter > 0 else np.zeros((n, 2))
    x = cells_x * cell + cell / 2 + off[:, 0]
    y = cells_y * cell + cell / 2 + off[:, 1]
    return np.column_stack([x, y])


def place_grid_jitter(domain, cell: int = 20, jitter: float | None = None, seed: int = 0) -> AttractorField:
    """One attractor per complete ``cell x cell`` block, jittered about its centre."""
    width, height = domain
    if jitter is None:
        jitter = cell / 2
    _check_grid(domain, cell, jitter)
    ny, nx = height // cell, width // cell
    cy, cx = np.divmod(np.arange(nx * ny), nx)
    return AttractorField(_jittered_cells(cx, cy, cell, jitter, make_rng(seed)))


def place_real_conditioned(
    reference_mask: BinaryMask,
    vessel_stride: int = 4,
    cell: int = 20,
    jitter: float | None = None,
    seed: int = 0,
) -> AttractorField:
    """Dense attractors on the reference vessels plus a jittered grid elsewhere.

    The vessel part keeps the first foreground pixel (row-major) of every
    ``vessel_stride`` block, so every foreground pixel has a dense attractor
    within Chebyshev distance ``vessel_stride - 1``.  Grid cells that hold no
    foreground pixel get one jittered attractor each.
    """
    if vessel_stride < 1:
        raise ParameterError("vessel_stride must be >= 1")
    fg = reference_mask.pixels
    height, width = fg.shape
    if jitter is None:
        jitter = cell / 2
    _check_grid((width, height), cell, jitter)
    if not fg.any():
        raise PlacementError("reference mask has no foreground")

    s = vessel_stride
    ys, xs = np.nonzero(fg)  # row-major order
    block = (ys // s) * (-(-width // s)) + xs // s
    _, first = np.unique(block, return_index=True)
    dense = np.column_stack([xs[first], ys[first]]).astype(float)

    ny, nx = height // cell, width // cell
    occupied = fg[: ny * cell, : nx * cell].reshape(ny, cell, nx, cell).any(axis=(1, 3))
    cy, cx = np.nonzero(~occupied)
    grid = _jittered_cells(cx, cy, cell, jitter, make_rng(seed))
    return AttractorField(np.concatenate([dense, grid]))


def init_roots(params: PlacementParams, domain, obstacle: BinaryMask | None = None) -> list[Point2]:
    width, height = domain
    if not params.roots:
        raise ParameterError("at least one root is required")
    out = []
    for r in params.roots:
        if not (0 <= r.x < width and 0 <= r.y < height):
            raise ParameterError(f"root ({r.x}, {r.y}) outside {width}x{height} domain")
        if in_obstacle(obstacle, r.x, r.y):
            raise ParameterError(f"root ({r.x}, {r.y}) lies inside the obstacle")
        out.append(Point2(r.x, r.y))
    return out


def place(params: PlacementParams, domain, obstacle: BinaryMask | None = None) -> AttractorField:
    """Dispatch on ``params.strategy``."""
    if params.strategy == "uniform":
        return place_uniform(domain, params.count, obstacle, params.seed)
    if params.strategy == "grid_jitter":
        field = place_grid_jitter(domain, params.cell, params.jitter, params.seed)
    else:
        field = place_real_conditioned(
            params.reference_mask, params.vessel_stride, params.cell, params.jitter, params.seed
        )
    if obstacle is not None and len(field):
        keep = np.array([not in_obstacle(obstacle, x, y) for x, y in field.points], dtype=bool)
        field = AttractorField(field.points[keep])
    return field
