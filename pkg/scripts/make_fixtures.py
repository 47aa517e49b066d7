#!/usr/bin/env python3
"""Regenerate the bundled fixture maps and scenario scripts in scenarios/.

Everything here is deterministic (fixed seeds, hand-placed geometry), so the
committed fixtures can always be reproduced byte-for-byte.
"""

from __future__ import annotations

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from polyroad.gridmap import GridMap
from polyroad.simulate import (Keyframe, ObstacleTrack, RobotSpec, Scenario,
                               save_scenario)

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "scenarios")


def empty_grid(size_m, resolution):
    dims = tuple(int(round(s / resolution)) for s in size_m)
    return GridMap(origin=(0.0, 0.0, 0.0), resolution=resolution,
                   occupancy=np.zeros(dims, dtype=bool))


def fill_box(gmap: GridMap, lo, hi):
    """Mark every cell whose extent intersects the world-space box occupied."""
    res = gmap.resolution
    lo = np.asarray(lo, dtype=float) - gmap.origin
    hi = np.asarray(hi, dtype=float) - gmap.origin
    i0 = np.maximum(np.floor(lo / res + 1e-9).astype(int), 0)
    i1 = np.minimum(np.ceil(hi / res - 1e-9).astype(int), gmap.dims)
    gmap.occupancy[i0[0]:i1[0], i0[1]:i1[1], i0[2]:i1[2]] = True


def make_sample():
    """10x10x2 m playground with four pillars; used for determinism checks."""
    g = empty_grid((10.0, 10.0, 2.0), 0.1)
    for cx, cy in [(3.0, 3.0), (7.0, 3.0), (3.0, 7.0), (7.0, 7.0)]:
        fill_box(g, (cx - 0.4, cy - 0.4, 0.0), (cx + 0.4, cy + 0.4, 2.0))
    g.save(os.path.join(OUT_DIR, "sample.grid"))
    return g


def make_two_chamber():
    """8x4x2 m: a full-height wall at x in [3.8, 4.2] with two doorways."""
    g = empty_grid((8.0, 4.0, 2.0), 0.1)
    fill_box(g, (3.8, 0.0, 0.0), (4.2, 4.0, 2.0))        # the wall
    # doorways: carve two full-height openings through it
    lo_y, hi_y = (0.6, 1.4), (2.6, 3.4)
    g.occupancy[38:42, int(lo_y[0] / 0.1):int(lo_y[1] / 0.1), :] = False
    g.occupancy[38:42, int(hi_y[0] / 0.1):int(hi_y[1] / 0.1), :] = False
    g.save(os.path.join(OUT_DIR, "two_chamber.grid"))
    return g


def make_cluster():
    """25x25x5 m field of scattered box pillars (seeded, deterministic)."""
    g = empty_grid((25.0, 25.0, 5.0), 0.2)
    rng = np.random.default_rng(2024)
    placed = 0
    while placed < 14:
        cx, cy = rng.uniform(4.0, 21.0, 2)
        # keep the start/goal corners and a 1.5 m margin around them clear
        if np.hypot(cx - 2.0, cy - 2.0) < 4.0 or \
           np.hypot(cx - 23.0, cy - 23.0) < 4.0:
            continue
        hx, hy = rng.uniform(0.4, 1.1, 2)
        hz = rng.uniform(1.5, 2.5)
        fill_box(g, (cx - hx, cy - hy, 0.0), (cx + hx, cy + hy, 2 * hz))
        placed += 1
    g.save(os.path.join(OUT_DIR, "cluster.grid"))
    return g


def make_two_chamber_scenario():
    """An obstacle slides into the south doorway while the robot heads for it."""
    sc = Scenario(
        map_path="scenarios/two_chamber.grid",
        robot=RobotSpec(start=np.array([1.0, 1.0, 1.0]),
                        goal=np.array([7.0, 1.0, 1.0]),
                        speed=1.0, radius=0.3),
        obstacles=(
            ObstacleTrack(
                obstacle_id=1,
                half_extents=np.array([0.5, 0.6, 1.1]),
                keyframes=(
                    Keyframe(t=0.0, center=np.array([4.0, 5.2, 1.0]), yaw=0.0),
                    Keyframe(t=0.3, center=np.array([4.0, 5.2, 1.0]), yaw=0.0),
                    Keyframe(t=1.5, center=np.array([4.0, 3.0, 1.0]), yaw=0.0),
                    Keyframe(t=20.0, center=np.array([4.0, 3.0, 1.0]), yaw=0.0),
                ),
            ),
        ),
        duration=20.0,
        dt=0.1,
        replan_window=0.2,
        snapshot_ticks=(0, 30, 60),
    )
    save_scenario(os.path.join(OUT_DIR, "two_chamber.scenario.json"), sc)
    return sc


def make_cluster_scenario():
    """Four boxes patrol the middle of the field; robot crosses the diagonal."""
    def patrol(oid, a, b, half, period, yaw_b=0.0):
        a, b = np.asarray(a, float), np.asarray(b, float)
        kfs = [Keyframe(t=0.0, center=a, yaw=0.0)]
        t = 0.0
        pos_pairs = [(b, yaw_b), (a, 0.0)]
        k = 0
        while t < 40.0:
            t += period
            target, yaw = pos_pairs[k % 2]
            kfs.append(Keyframe(t=t, center=target, yaw=yaw))
            k += 1
        return ObstacleTrack(obstacle_id=oid,
                             half_extents=np.asarray(half, float),
                             keyframes=tuple(kfs))

    sc = Scenario(
        map_path="scenarios/cluster.grid",
        robot=RobotSpec(start=np.array([2.0, 2.0, 1.0]),
                        goal=np.array([23.0, 23.0, 2.0]),
                        speed=1.0, radius=0.3),
        obstacles=(
            patrol(1, (8.0, 5.0, 1.2), (8.0, 10.0, 1.2),
                   (0.6, 0.6, 1.2), 8.0, yaw_b=0.8),
            patrol(2, (14.0, 12.0, 1.5), (10.0, 12.0, 1.5),
                   (0.7, 0.5, 1.5), 9.0, yaw_b=-0.6),
            patrol(3, (18.0, 15.0, 1.0), (18.0, 20.0, 1.0),
                   (0.5, 0.8, 1.0), 10.0, yaw_b=0.5),
            patrol(4, (12.0, 20.0, 1.4), (16.0, 18.0, 1.4),
                   (0.6, 0.6, 1.4), 11.0, yaw_b=-0.9),
        ),
        duration=40.0,
        dt=0.1,
        replan_window=0.2,
        snapshot_ticks=(0, 150, 300),
    )
    save_scenario(os.path.join(OUT_DIR, "cluster.scenario.json"), sc)
    return sc


def main():
    os.makedirs(OUT_DIR, exist_ok=True)
    g1 = make_sample()
    g2 = make_two_chamber()
    g3 = make_cluster()
    make_two_chamber_scenario()
    make_cluster_scenario()
    for name, g in [("sample", g1), ("two_chamber", g2), ("cluster", g3)]:
        occ = int(g.occupancy.sum())
        print(f"{name}: dims {g.dims}, occupied {occ} "
              f"({occ / g.n_cells:.1%}), free {g.free_count}")
    print(f"fixtures written to {os.path.abspath(OUT_DIR)}")


if __name__ == "__main__":
    main()
