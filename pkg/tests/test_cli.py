"""End-to-end CLI behavior: build/sim/plan subcommands, exit codes, artifacts."""

import csv
import json

import numpy as np
import pytest

from polyroad.cli import main
from polyroad.gridmap import GridMap
from polyroad.serialize import load_snapshot
from polyroad.simulate import (
    Keyframe,
    ObstacleTrack,
    RobotSpec,
    Scenario,
    save_scenario,
)

RADIUS = 0.1


def make_pillar_grid(path):
    """4 x 2 x 1 m room at 0.25 m cells with one full-height central pillar."""
    occ = np.zeros((16, 8, 4), dtype=bool)
    occ[7:9, 3:5, :] = True
    GridMap(origin=np.zeros(3), resolution=0.25, occupancy=occ).save(path)


@pytest.fixture(scope="module")
def world(tmp_path_factory):
    """Grid + prebuilt roadmap shared by the read-only CLI tests."""
    root = tmp_path_factory.mktemp("cli_world")
    grid = root / "room.grid"
    roadmap = root / "room.roadmap.json"
    make_pillar_grid(str(grid))
    rc = main(["build", "--map", str(grid), "--out", str(roadmap),
               "--rho", "0.95", "--seed", "0", "--radius", str(RADIUS)])
    assert rc == 0
    return {"grid": grid, "roadmap": roadmap, "root": root}


# -- build -------------------------------------------------------------------------


def test_build_reports_and_writes(world, capsys):
    out = world["root"] / "again.roadmap.json"
    rc = main(["build", "--map", str(world["grid"]), "--out", str(out),
               "--rho", "0.95", "--radius", str(RADIUS)])
    captured = capsys.readouterr().out
    assert rc == 0 and out.exists()
    assert "polyhedra:" in captured and "coverage:" in captured
    assert "16x8x4 cells" in captured


def test_build_is_deterministic(world):
    a = world["root"] / "det_a.json"
    b = world["root"] / "det_b.json"
    for out in (a, b):
        rc = main(["build", "--map", str(world["grid"]), "--out", str(out),
                   "--rho", "0.95", "--seed", "7", "--radius", str(RADIUS)])
        assert rc == 0
    assert a.read_bytes() == b.read_bytes()


def test_build_missing_map_exits_2(tmp_path, capsys):
    rc = main(["build", "--map", str(tmp_path / "nope.grid"),
               "--out", str(tmp_path / "o.json")])
    assert rc == 2
    assert "cannot read map" in capsys.readouterr().err


def test_build_full_map_exits_2(tmp_path, capsys):
    grid = tmp_path / "solid.grid"
    GridMap(origin=np.zeros(3), resolution=0.5,
            occupancy=np.ones((4, 4, 2), dtype=bool)).save(str(grid))
    rc = main(["build", "--map", str(grid), "--out", str(tmp_path / "o.json")])
    assert rc == 2
    assert "no free space" in capsys.readouterr().err


# -- sim ---------------------------------------------------------------------------


def crossing_scenario(grid_path, snapshot_ticks=()):
    # box drops far ahead of the robot, severs the room near x=3, then lifts
    track = ObstacleTrack(
        obstacle_id=1,
        half_extents=np.array([0.15, 1.1, 0.8]),
        keyframes=(
            Keyframe(0.0, np.array([3.0, 1.0, 3.0]), 0.0),
            Keyframe(1.0, np.array([3.0, 1.0, 0.5]), 0.0),
            Keyframe(2.5, np.array([3.0, 1.0, 0.5]), 0.0),
            Keyframe(3.5, np.array([3.0, 1.0, 3.0]), 0.0),
        ))
    return Scenario(
        map_path=str(grid_path),
        robot=RobotSpec(start=np.array([0.3, 1.0, 0.5]),
                        goal=np.array([3.7, 1.0, 0.5]),
                        speed=1.0, radius=RADIUS),
        obstacles=(track,),
        duration=12.0, dt=0.1, replan_window=0.2,
        snapshot_ticks=tuple(snapshot_ticks))


def test_sim_runs_to_goal(world, tmp_path, capsys):
    sc_path = tmp_path / "sc.json"
    save_scenario(str(sc_path), crossing_scenario(world["grid"], (0, 20)))
    metrics = tmp_path / "metrics.csv"
    snaps = tmp_path / "snaps"
    rc = main(["sim", "--roadmap", str(world["roadmap"]),
               "--scenario", str(sc_path), "--metrics", str(metrics),
               "--snapshots", str(snaps)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "goal reached" in out and "safety violations: 0" in out
    with open(metrics) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["tick", "event", "node_count", "duration_us"]
    assert len(rows) > 1
    doc = load_snapshot(str(snaps / "snapshot_00000.json"))
    assert doc["tick"] == 0
    assert (snaps / "snapshot_00020.json").exists()


def test_sim_missing_roadmap_exits_2(world, tmp_path, capsys):
    sc_path = tmp_path / "sc.json"
    save_scenario(str(sc_path), crossing_scenario(world["grid"]))
    rc = main(["sim", "--roadmap", str(tmp_path / "nope.json"),
               "--scenario", str(sc_path), "--metrics",
               str(tmp_path / "m.csv")])
    assert rc == 2
    assert "error:" in capsys.readouterr().err


def test_sim_unknown_map_exits_2(world, tmp_path, capsys):
    sc_path = tmp_path / "sc.json"
    save_scenario(str(sc_path),
                  crossing_scenario(tmp_path / "missing.grid"))
    rc = main(["sim", "--roadmap", str(world["roadmap"]),
               "--scenario", str(sc_path), "--metrics",
               str(tmp_path / "m.csv")])
    assert rc == 2
    assert "references unknown map" in capsys.readouterr().err


# -- plan --------------------------------------------------------------------------


def test_plan_prints_rooms_and_waypoints(world, capsys):
    rc = main(["plan", "--roadmap", str(world["roadmap"]),
               "--start", "0.3,1.0,0.5", "--goal", "3.7,1.0,0.5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert out.startswith("rooms: ")
    assert "waypoints:" in out
    wps = [[float(v) for v in ln.split()]
           for ln in out.splitlines() if ln.startswith("  ")]
    assert np.allclose(wps[0], [0.3, 1.0, 0.5])
    assert np.allclose(wps[-1], [3.7, 1.0, 0.5])


def test_plan_same_point(world, capsys):
    rc = main(["plan", "--roadmap", str(world["roadmap"]),
               "--start", "0.3,1.0,0.5", "--goal", "0.3,1.0,0.5"])
    out = capsys.readouterr().out
    assert rc == 0
    assert len([ln for ln in out.splitlines() if ln.startswith("  ")]) == 2


def test_plan_uncovered_goal(world, capsys):
    rc = main(["plan", "--roadmap", str(world["roadmap"]),
               "--start", "0.3,1.0,0.5", "--goal", "9.0,9.0,9.0"])
    out = capsys.readouterr().out
    assert rc == 1
    assert "uncovered" in out


def test_plan_goal_inside_obstacle(world, tmp_path, capsys):
    obs = tmp_path / "obs.json"
    obs.write_text(json.dumps([{"id": 5, "center": [3.0, 1.0, 0.5],
                                "yaw": 0.3, "half_extents": [0.3, 0.3, 0.3]}]))
    rc = main(["plan", "--roadmap", str(world["roadmap"]),
               "--start", "0.3,1.0,0.5", "--goal", "3.0,1.0,0.5",
               "--obstacles", str(obs)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "blocked: inside obstacle 5" in out


def test_plan_unreachable_goal(world, tmp_path, capsys):
    # wall off the right half of the room with one fat box
    obs = tmp_path / "wall.json"
    obs.write_text(json.dumps({"obstacles": [
        {"id": 9, "center": [2.0, 1.0, 0.5],
         "half_extents": [0.2, 1.2, 0.7]}]}))
    rc = main(["plan", "--roadmap", str(world["roadmap"]),
               "--start", "0.3,1.0,0.5", "--goal", "3.7,1.0,0.5",
               "--obstacles", str(obs)])
    out = capsys.readouterr().out
    assert rc == 1
    assert "unreachable" in out


def test_plan_rejects_malformed_point(world):
    with pytest.raises(SystemExit):
        main(["plan", "--roadmap", str(world["roadmap"]),
              "--start", "1,2", "--goal", "3.7,1.0,0.5"])
