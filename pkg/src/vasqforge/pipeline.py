"""Config ingestion, modality presets and the per-image generation pipeline."""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Optional

import numpy as np

from .core import (
    AttractorField,
    BinaryMask,
    GrowthParams,
    ParameterError,
    PlacementError,
    PlacementParams,
    RadiusParams,
    RasterParams,
    VasqError,
    VesselForest,
    in_obstacle,
)
from .growth import Grower
from .placement import derive_seed, init_roots, make_rng, place
from .radius import assign_radii
from .raster import rasterize, render_skeleton


class ConfigError(VasqError):
    pass


def _ring_roots(cx, cy, r, n):
    return [[round(cx + r * math.cos(2 * math.pi * k / n), 3), round(cy + r * math.sin(2 * math.pi * k / n), 3)]
            for k in range(n)]


DEFAULTS: dict[str, dict[str, Any]] = {
    "domain": {"width": 512, "height": 512, "obstacle": None},
    "placement": {
        "strategy": "grid_jitter",
        "roots": [[256.0, 256.0]],
        "root_jitter": 0.0,
        "count": 2000,
        "cell": 10,
        "jitter": 5.0,
        "vessel_stride": 4,
        "reference_mask": None,
    },
    "growth": {
        "Da": 20.0, "Dk": 10.0, "Ls": 15.0, "N_max": 2000, "T_max": 500,
        "per_attractor_normalize": False, "nearest_only": False,
    },
    "radius": {"r_tip": 1.0, "gamma": 2.0, "r_max": 12.0},
    "raster": {"supersample": 2},
}

# Engineering defaults; only the root layout follows the anatomy of each modality.
PRESETS: dict[str, dict[str, Any]] = {
    "fundus": {"placement": {"roots": [[130.0, 256.0]], "root_jitter": 12.0}},
    "octa": {
        "domain": {"obstacle": {"disc": [256.0, 256.0, 32.0]}},
        "placement": {"roots": _ring_roots(256.0, 256.0, 40.0, 6), "root_jitter": 3.0},
        "radius": {"r_max": 6.0},
    },
    "oct": {
        "domain": {"obstacle": {"disc": [256.0, 256.0, 52.0]}},
        "placement": {"roots": _ring_roots(256.0, 256.0, 60.0, 4), "root_jitter": 4.0, "cell": 12, "jitter": 6.0},
        "growth": {"N_max": 1500},
        "radius": {"r_max": 8.0},
    },
    "brain_dsa": {
        "placement": {"roots": [[256.0, 496.0]], "root_jitter": 16.0},
        "radius": {"r_max": 14.0},
    },
    "coronary_dsa": {
        "placement": {"roots": [[256.0, 24.0]], "root_jitter": 24.0, "cell": 12, "jitter": 6.0},
        "growth": {"N_max": 1200},
        "radius": {"r_max": 10.0},
    },
}


def _merge(base: dict, over: dict, where: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in over.items():
        path = f"{where}.{key}" if where else key
        if key not in base:
            raise ConfigError(f"unknown config key '{path}'")
        if isinstance(base[key], dict) and isinstance(val, dict):
            out[key] = _merge(base[key], val, path)
        else:
            out[key] = copy.deepcopy(val)
    return out


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (choose from {', '.join(PRESETS)})")
    return _merge(DEFAULTS, PRESETS[name])


@dataclass
class EngineConfig:
    """Validated pipeline configuration.

    ``raw`` keeps the merged JSON-able dictionary; relative file paths in it
    are resolved against ``base_dir``.
    """

    raw: dict
    growth: GrowthParams
    radius: RadiusParams
    raster: RasterParams
    width: int
    height: int
    obstacle: Optional[BinaryMask]
    reference_mask: Optional[BinaryMask]
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | str = ".") -> "EngineConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        if "preset" in data:
            data = dict(data)
            base = preset(data.pop("preset"))
        else:
            base = DEFAULTS
        raw = _merge(base, data)
        base_dir = Path(base_dir)
        dom, pl = raw["domain"], raw["placement"]
        try:
            width, height = int(dom["width"]), int(dom["height"])
            if width < 1 or height < 1:
                raise ConfigError("domain.width and domain.height must be >= 1")
            obstacle = _load_obstacle(dom["obstacle"], width, height, base_dir)
            growth = GrowthParams(**raw["growth"], obstacle=obstacle)
            radius = RadiusParams(**raw["radius"])
            raster = RasterParams(width, height, int(raw["raster"]["supersample"]))
            ref = None
            if pl["reference_mask"] is not None:
                ref = BinaryMask.load_png(base_dir / pl["reference_mask"])
            # validates strategy, roots and grid parameters
            params = _placement(raw, ref, seed=0)
            init_roots(params, (width, height), obstacle)
            place(params, (width, height), obstacle)
        except ConfigError:
            raise
        except (ParameterError, PlacementError, TypeError, ValueError, KeyError) as exc:
            raise ConfigError(str(exc)) from exc
        except OSError as exc:
            raise ConfigError(f"cannot read referenced file: {exc}") from exc
        return cls(raw, growth, radius, raster, width, height, obstacle, ref, base_dir)

    @classmethod
    def load(cls, source: str) -> "EngineConfig":
        """``source`` is a preset name or a path to a JSON config."""
        if source in PRESETS:
            return cls.from_dict({"preset": source})
        path = Path(source)
        try:
            data = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config '{source}' is neither a preset nor an existing file")
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config '{source}' is not valid JSON: {exc}")
        return cls.from_dict(data, path.parent)

    def with_growth(self, **changes) -> "EngineConfig":
        raw = copy.deepcopy(self.raw)
        raw["growth"].update(changes)
        return EngineConfig.from_dict(raw, self.base_dir)

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _load_obstacle(source, width, height, base_dir) -> Optional[BinaryMask]:
    if source is None:
        return None
    if isinstance(source, dict):
        if set(source) != {"disc"}:
            raise ConfigError("domain.obstacle must be a PNG path or {\"disc\": [cx, cy, r]}")
        cx, cy, r = (float(v) for v in source["disc"])
        yy, xx = np.mgrid[0:height, 0:width]
        return BinaryMask((xx - cx) ** 2 + (yy - cy) ** 2 <= r * r)
    return BinaryMask.load_png(base_dir / source)


def _placement(raw: dict, ref: Optional[BinaryMask], seed: int) -> PlacementParams:
    pl = raw["placement"]
    return PlacementParams(
        strategy=pl["strategy"],
        roots=[tuple(r) for r in pl["roots"]],
        count=int(pl["count"]),
        cell=int(pl["cell"]),
        jitter=None if pl["jitter"] is None else float(pl["jitter"]),
        vessel_stride=int(pl["vessel_stride"]),
        reference_mask=ref,
        seed=seed,
    )


@dataclass
class Sample:
    index: int
    seed: int
    forest: VesselForest
    mask: BinaryMask
    skeleton: BinaryMask
    iterations: int
    attractors: int
    attractors_left: int

    def summary(self) -> dict:
        f = self.forest
        return {
            "index": self.index,
            "seed": self.seed,
            "nodes": len(f),
            "iterations": self.iterations,
            "bifurcations": len(f.bifurcations()),
            "leaves": len(f.leaves()),
            "attractors": self.attractors,
            "attractors_left": self.attractors_left,
            "density": round(float(self.mask.pixels.mean()), 8),
        }


def jittered_roots(cfg: EngineConfig, seed: int):
    params = _placement(cfg.raw, cfg.reference_mask, seed)
    roots = init_roots(params, (cfg.width, cfg.height), cfg.obstacle)
    amp = float(cfg.raw["placement"]["root_jitter"])
    if amp <= 0:
        return params, roots
    rng = make_rng(derive_seed(seed, 1))
    out = []
    for r in roots:
        dx, dy = rng.uniform(-amp, amp, size=2)
        x = min(max(r.x + dx, 0.0), cfg.width - 1.0)
        y = min(max(r.y + dy, 0.0), cfg.height - 1.0)
        if in_obstacle(cfg.obstacle, x, y):
            x, y = r.x, r.y
        out.append((x, y))
    return params, out


def build_forest(cfg: EngineConfig, seed: int) -> tuple[VesselForest, AttractorField, int]:
    params, roots = jittered_roots(cfg, seed)
    field = place(params, (cfg.width, cfg.height), cfg.obstacle)
    forest = VesselForest(cfg.width, cfg.height)
    for r in roots:
        forest.add_node(r)
    iterations = Grower(forest, field, cfg.growth).grow()
    return forest, field, iterations


def generate_one(cfg: EngineConfig, index: int, seed: int) -> Sample:
    forest, field, iterations = build_forest(cfg, seed)
    forest = assign_radii(forest, cfg.radius)
    mask = rasterize(forest, cfg.raster)
    skel = render_skeleton(forest, cfg.raster.width, cfg.raster.height)
    return Sample(index, seed, forest, mask, skel, iterations, len(field), field.live_count())
