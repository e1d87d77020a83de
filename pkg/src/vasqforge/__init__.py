"""Procedural vessel-mask engine built on space colonization."""

__version__ = "0.1.0"

from .core import (  # noqa: E402
    AttractorField,
    BinaryMask,
    GrowthNode,
    GrowthParams,
    PlacementParams,
    Point2,
    RadiusParams,
    RasterParams,
    VesselForest,
)
from .growth import grow, growth_direction, influenced_nodes, step  # noqa: E402
from .radius import assign_radii  # noqa: E402
from .raster import rasterize, render_skeleton  # noqa: E402
