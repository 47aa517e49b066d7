"""Command-line front end: `build` roadmaps, `sim` scenarios, `plan` queries."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from . import navgraph as ng
from .geometry import OBB
from .gridmap import GridError, GridFormatError, GridMap
from .polyhedronize import BuildConfig, build
from .serialize import SerializationError, load_roadmap, save_roadmap
from .simulate import Simulator, load_scenario


def _point(text: str) -> np.ndarray:
    try:
        parts = [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"expected x,y,z got {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected 3 coordinates in {text!r}")
    return np.array(parts)


def _fmt_point(p) -> str:
    return " ".join(f"{float(v):.6f}" for v in p)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="polyroad",
        description="Convex free-space roadmaps over occupancy grids: "
                    "build them, replay moving-obstacle scenarios, and "
                    "answer path queries.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_build = sub.add_parser(
        "build", help="cover a grid map's free space with convex polytopes")
    p_build.add_argument("--map", required=True, help="input .grid file")
    p_build.add_argument("--out", required=True, help="output roadmap JSON")
    p_build.add_argument("--rho", type=float, default=0.85,
                         help="target free-space coverage ratio (default 0.85)")
    p_build.add_argument("--max-samples", type=int, default=5000,
                         help="seed sampling budget (default 5000)")
    p_build.add_argument("--seed", type=int, default=0,
                         help="RNG seed for seed sampling (default 0)")
    p_build.add_argument("--radius", type=float, default=0.3,
                         help="robot radius in meters (default 0.3)")

    p_sim = sub.add_parser(
        "sim", help="replay a moving-obstacle scenario over a roadmap")
    p_sim.add_argument("--roadmap", required=True)
    p_sim.add_argument("--scenario", required=True)
    p_sim.add_argument("--metrics", required=True,
                       help="output CSV of per-event timings")
    p_sim.add_argument("--snapshots", default=None,
                       help="directory for snapshot JSON files "
                            "(ticks listed in the scenario)")
    p_sim.add_argument("--seed", type=int, default=0,
                       help="reserved; replay is deterministic (default 0)")

    p_plan = sub.add_parser(
        "plan", help="answer one start/goal query against a roadmap")
    p_plan.add_argument("--roadmap", required=True)
    p_plan.add_argument("--start", required=True, type=_point,
                        metavar="X,Y,Z")
    p_plan.add_argument("--goal", required=True, type=_point, metavar="X,Y,Z")
    p_plan.add_argument("--obstacles", default=None,
                        help="optional JSON file of box obstacles "
                             "(id, center, yaw, half_extents) to apply first")
    return parser


# -- build -------------------------------------------------------------------


def cmd_build(args) -> int:
    try:
        gmap = GridMap.load(args.map)
    except (OSError, GridFormatError, GridError) as e:
        print(f"error: cannot read map {args.map}: {e}", file=sys.stderr)
        return 2
    if gmap.free_count == 0:
        print(f"error: map {args.map} has no free space", file=sys.stderr)
        return 2
    cfg = BuildConfig(rho_e=args.rho, max_samples=args.max_samples,
                      rng_seed=args.seed, robot_radius=args.radius)
    store = build(gmap, cfg)
    meta = dict(store.meta)
    meta["map"] = args.map
    save_roadmap(args.out, store, meta=meta)
    nx, ny, nz = gmap.dims
    print(f"map: {args.map} ({nx}x{ny}x{nz} cells at {gmap.resolution} m)")
    print(f"polyhedra: {len(store.roots)}")
    print(f"coverage: {meta['rho']:.4f} (target {args.rho}) "
          f"after {meta['samples']} samples")
    print(f"roadmap written to {args.out}")
    return 0


# -- sim ---------------------------------------------------------------------


def cmd_sim(args) -> int:
    try:
        store, _meta = load_roadmap(args.roadmap)
        scenario = load_scenario(args.scenario)
    except (OSError, SerializationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if not os.path.exists(scenario.map_path):
        print(f"error: scenario references unknown map: {scenario.map_path}",
              file=sys.stderr)
        return 2
    if args.snapshots:
        os.makedirs(args.snapshots, exist_ok=True)
    sim = Simulator(store, scenario, snapshot_dir=args.snapshots)
    result = sim.run()
    result.metrics.write_csv(args.metrics)
    print(result.metrics.format_summary())
    print(f"ticks: {result.ticks_run}   replans: {len(result.replan_ticks)}   "
          f"safety violations: {result.violations}")
    if result.reached_goal:
        print(f"goal reached at {_fmt_point(result.final_position)}")
    else:
        print(f"goal NOT reached; final position "
              f"{_fmt_point(result.final_position)}")
    print(f"metrics written to {args.metrics}")
    if result.snapshots_written:
        print(f"snapshots: {len(result.snapshots_written)} file(s) in "
              f"{args.snapshots}")
    return 0 if result.reached_goal else 1


# -- plan --------------------------------------------------------------------


def _load_obstacles(path: str) -> list[tuple[int, OBB]]:
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    records = doc["obstacles"] if isinstance(doc, dict) else doc
    out = []
    for rec in records:
        yaw = float(rec.get("yaw", 0.0))
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        out.append((int(rec["id"]),
                    OBB(center=np.array(rec["center"], dtype=float),
                        rotation=rot,
                        half_extents=np.array(rec["half_extents"],
                                              dtype=float))))
    return out


def _describe_unlocated(label: str, point: np.ndarray,
                        obstacles: list[tuple[int, OBB]],
                        robot_radius: float) -> str:
    for oid, obb in obstacles:
        if obb.inflate(robot_radius).contains_point(point, tol=1e-9):
            return (f"{label} {_fmt_point(point)} is blocked: inside "
                    f"obstacle {oid} (inflated by the robot radius)")
    return (f"{label} {_fmt_point(point)} is uncovered: no roadmap "
            f"polyhedron contains it")


def cmd_plan(args) -> int:
    try:
        store, _meta = load_roadmap(args.roadmap)
        obstacles = _load_obstacles(args.obstacles) if args.obstacles else []
    except (OSError, SerializationError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    for oid, obb in obstacles:
        store.register_obstacle(oid, obb)
        store.polyhedron_decomposition(store.overlapping_nodes(obb), oid, obb)

    start_room = ng.locate(store, args.start)
    goal_room = ng.locate(store, args.goal)
    failed = False
    for label, point, room in (("start", args.start, start_room),
                               ("goal", args.goal, goal_room)):
        if room is None:
            print(_describe_unlocated(label, point, obstacles,
                                      store.robot_radius))
            failed = True
    if failed:
        return 1

    graph = ng.build_graph(store)
    res = ng.plan_path(store, graph, args.start, args.goal)
    if res is None:
        print(f"unreachable: no room path from {start_room} to {goal_room}")
        return 1
    ids, waypoints = res
    print("rooms: " + " -> ".join(str(i) for i in ids))
    print("waypoints:")
    for p in waypoints:
        print(f"  {_fmt_point(p)}")
    return 0


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    handler = {"build": cmd_build, "sim": cmd_sim, "plan": cmd_plan}
    return handler[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
