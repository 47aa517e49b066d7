"""Static map polyhedronization: sample, inflate, accept, repeat.

Seeds are drawn uniformly from free cells not yet covered by an accepted
polyhedron; each seed is inflated into a convex region and kept when it passes
the quality gate.  The loop stops at the coverage target, the sample budget,
or saturation (no uncovered free cell left).  With a fixed seed the resulting
store is bit-identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gridmap import CoverageTracker, GridMap, sample_uncovered_free, update_ratio
from .regions import InflationConfig, inflate_region
from .roadmap import RoadmapStore, is_good_poly


@dataclass(frozen=True)
class BuildConfig:
    rho_e: float = 0.85               # target covered fraction of free cells
    max_samples: int = 5000
    rng_seed: int = 0
    robot_radius: float = 0.3
    good_poly_min_radius: float | None = None   # default: robot_radius
    good_poly_min_volume: float | None = None   # default: 8 * resolution^3
    inflation: InflationConfig = field(default_factory=InflationConfig)

    def __post_init__(self):
        if not (0 < self.rho_e <= 1):
            raise ValueError("rho_e must be in (0, 1]")
        if self.max_samples < 0:
            raise ValueError("max_samples must be nonnegative")
        if self.robot_radius < 0:
            raise ValueError("robot_radius must be nonnegative")

    def effective_min_radius(self) -> float:
        return self.robot_radius if self.good_poly_min_radius is None \
            else self.good_poly_min_radius

    def effective_min_volume(self, resolution: float) -> float:
        return 8.0 * resolution**3 if self.good_poly_min_volume is None \
            else self.good_poly_min_volume


def build(gmap: GridMap, cfg: BuildConfig) -> RoadmapStore:
    """Cover the free space of gmap with good convex polyhedra."""
    rng = np.random.default_rng(cfg.rng_seed)
    tracker = CoverageTracker(gmap)
    min_radius = cfg.effective_min_radius()
    min_volume = cfg.effective_min_volume(gmap.resolution)
    roots = []
    samples = 0
    while tracker.rho < cfg.rho_e and samples < cfg.max_samples:
        seed = sample_uncovered_free(gmap, tracker, rng)
        if seed is None:
            break
        samples += 1
        poly = inflate_region(seed, gmap, cfg.inflation)
        if is_good_poly(poly, min_radius, min_volume):
            roots.append(poly)
            update_ratio(tracker, gmap, poly)
    meta = {
        "rho": tracker.rho,
        "samples": samples,
        "resolution": gmap.resolution,
        "rho_e": cfg.rho_e,
        "max_samples": cfg.max_samples,
        "rng_seed": cfg.rng_seed,
        "bbox_halfwidth": cfg.inflation.bbox_halfwidth,
        "max_iterations": cfg.inflation.max_iterations,
        "volume_growth_tol": cfg.inflation.volume_growth_tol,
    }
    return RoadmapStore.from_roots(
        roots, cfg.robot_radius, min_radius, min_volume, meta=meta
    )
