from __future__ import annotations

from .core import RadiusParams, VesselForest


def assign_radii(forest: VesselForest, params: RadiusParams | None = None) -> VesselForest:
    """Tip-to-base radius recursion following Murray's law.

    Leaves get ``r_tip``; every other node gets ``(sum r_child**gamma)**(1/gamma)``
    capped at ``r_max``.  Children always carry larger ids than their parent,
    so one reverse pass suffices.  Returns a new forest; nodes where the cap
    was applied have ``clamped`` set.
    """
    params = params or RadiusParams()
    out = forest.copy()
    g = params.gamma
    for node in reversed(out.nodes):
        kids = out._children[node.id]
        if not kids:
            r = params.r_tip
        elif len(kids) == 1:
            r = out.nodes[kids[0]].radius
        else:
            r = sum(out.nodes[k].radius ** g for k in kids) ** (1.0 / g)
        node.clamped = r > params.r_max
        node.radius = min(r, params.r_max)
    return out
