"""Scenario replay: scripted box obstacles, tick loop, replan rule, metrics.

A scenario scripts oriented boxes through keyframed poses over a static
roadmap.  Each tick the simulator interpolates obstacle poses, applies the
resulting roadmap mutations, patches the navigation graph, and advances the
robot along its planned waypoints.  Replanning follows a fixed rule: a replan
happens in a tick iff at least `dt` has elapsed since the last plan AND some
room id on the current path was decomposed or restored within the trailing
`replan_window` (a robot with no usable path replans on the `dt` cadence
alone).  If the room under the robot is destroyed, the robot holds position
until a replan succeeds.

Timing is collected per event kind — decomposition, restoration,
graph_update — matching the roadmap's three mutation phases.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from time import perf_counter

import numpy as np

from . import navgraph as ng
from .geometry import OBB
from .roadmap import NodeState, RoadmapStore
from .serialize import (SCHEMA_VERSION, SerializationError, _dump, _load,
                        _vec, export_snapshot)

SCENARIO_KIND = "polyroad-scenario"


# -- scenario script -------------------------------------------------------------


@dataclass(frozen=True)
class Keyframe:
    t: float
    center: np.ndarray
    yaw: float


@dataclass(frozen=True)
class ObstacleTrack:
    """One box obstacle moving through keyframed (time, center, yaw) poses."""

    obstacle_id: int
    half_extents: np.ndarray
    keyframes: tuple[Keyframe, ...]

    def __post_init__(self):
        if not self.keyframes:
            raise SerializationError(
                f"obstacle {self.obstacle_id}: needs at least one keyframe")
        times = [kf.t for kf in self.keyframes]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise SerializationError(
                f"obstacle {self.obstacle_id}: keyframe times must be "
                f"strictly increasing, got {times}")

    def pose(self, t: float) -> tuple[np.ndarray, float]:
        """Pose at time t: clamped ends, linear centers, shortest-arc yaw."""
        kfs = self.keyframes
        if t <= kfs[0].t:
            return np.array(kfs[0].center, dtype=float), float(kfs[0].yaw)
        if t >= kfs[-1].t:
            return np.array(kfs[-1].center, dtype=float), float(kfs[-1].yaw)
        hi = next(i for i, kf in enumerate(kfs) if kf.t >= t)
        a, b = kfs[hi - 1], kfs[hi]
        u = (t - a.t) / (b.t - a.t)
        center = (1.0 - u) * np.asarray(a.center, float) \
            + u * np.asarray(b.center, float)
        yaw = a.yaw + u * math.remainder(b.yaw - a.yaw, math.tau)
        return center, float(yaw)

    def obb(self, t: float) -> OBB:
        center, yaw = self.pose(t)
        c, s = math.cos(yaw), math.sin(yaw)
        rot = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
        return OBB(center=center, rotation=rot,
                   half_extents=np.asarray(self.half_extents, float))


@dataclass(frozen=True)
class RobotSpec:
    start: np.ndarray
    goal: np.ndarray
    speed: float
    radius: float | None = None


@dataclass(frozen=True)
class Scenario:
    map_path: str
    robot: RobotSpec
    obstacles: tuple[ObstacleTrack, ...]
    duration: float
    dt: float = 0.1
    replan_window: float = 0.2
    snapshot_ticks: tuple[int, ...] = ()

    def __post_init__(self):
        if self.dt <= 0:
            raise SerializationError("scenario dt must be > 0")
        if self.duration <= 0:
            raise SerializationError("scenario duration must be > 0")
        if self.robot.speed <= 0:
            raise SerializationError("robot speed must be > 0")
        ids = [tr.obstacle_id for tr in self.obstacles]
        if len(ids) != len(set(ids)):
            raise SerializationError(f"duplicate obstacle ids: {ids}")


def save_scenario(path: str, sc: Scenario) -> None:
    doc = {
        "schema": SCHEMA_VERSION,
        "kind": SCENARIO_KIND,
        "map": sc.map_path,
        "duration": float(sc.duration),
        "dt": float(sc.dt),
        "replan_window": float(sc.replan_window),
        "snapshot_ticks": [int(k) for k in sc.snapshot_ticks],
        "robot": {
            "start": _vec(sc.robot.start),
            "goal": _vec(sc.robot.goal),
            "speed": float(sc.robot.speed),
            "radius": None if sc.robot.radius is None else float(sc.robot.radius),
        },
        "obstacles": [{
            "id": int(tr.obstacle_id),
            "half_extents": _vec(tr.half_extents),
            "keyframes": [{"t": float(kf.t), "center": _vec(kf.center),
                           "yaw": float(kf.yaw)} for kf in tr.keyframes],
        } for tr in sc.obstacles],
    }
    _dump(doc, path)


def load_scenario(path: str) -> Scenario:
    doc = _load(path)
    if not isinstance(doc, dict) or doc.get("kind") != SCENARIO_KIND:
        raise SerializationError(f"{path}: not a {SCENARIO_KIND} file")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SerializationError(
            f"{path}: unsupported schema {doc.get('schema')!r}")
    try:
        robot = RobotSpec(
            start=np.array(doc["robot"]["start"], dtype=float),
            goal=np.array(doc["robot"]["goal"], dtype=float),
            speed=float(doc["robot"]["speed"]),
            radius=(None if doc["robot"].get("radius") is None
                    else float(doc["robot"]["radius"])),
        )
        obstacles = tuple(
            ObstacleTrack(
                obstacle_id=int(rec["id"]),
                half_extents=np.array(rec["half_extents"], dtype=float),
                keyframes=tuple(
                    Keyframe(t=float(kf["t"]),
                             center=np.array(kf["center"], dtype=float),
                             yaw=float(kf["yaw"]))
                    for kf in rec["keyframes"]),
            ) for rec in doc.get("obstacles", []))
        return Scenario(
            map_path=str(doc["map"]),
            robot=robot,
            obstacles=obstacles,
            duration=float(doc["duration"]),
            dt=float(doc.get("dt", 0.1)),
            replan_window=float(doc.get("replan_window", 0.2)),
            snapshot_ticks=tuple(int(k) for k in doc.get("snapshot_ticks", [])),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise SerializationError(f"{path}: bad scenario field ({e})") from e


# -- metrics ---------------------------------------------------------------------

EVENT_KINDS = ("decomposition", "restoration", "graph_update")


@dataclass(frozen=True)
class MetricsRecord:
    tick: int
    event: str
    node_count: int
    duration_s: float


class MetricsLog:
    """Per-event timing rows plus a Times/Total/Average summary."""

    def __init__(self):
        self.records: list[MetricsRecord] = []

    def add(self, tick: int, event: str, node_count: int,
            duration_s: float) -> None:
        if event not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {event!r}")
        self.records.append(MetricsRecord(tick, event, node_count, duration_s))

    def write_csv(self, path: str) -> None:
        lines = ["tick,event,node_count,duration_us"]
        lines += [f"{r.tick},{r.event},{r.node_count},"
                  f"{round(r.duration_s * 1e6)}" for r in self.records]
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")

    def summary(self) -> dict[str, tuple[int, float, float]]:
        """Per kind: (times, total seconds, average seconds)."""
        out = {}
        for kind in EVENT_KINDS:
            durs = [r.duration_s for r in self.records if r.event == kind]
            total = sum(durs)
            out[kind] = (len(durs), total, total / len(durs) if durs else 0.0)
        return out

    def format_summary(self) -> str:
        rows = [f"{'event':<16}{'Times':>8}{'Total (ms)':>14}{'Average (ms)':>14}"]
        for kind, (times, total, avg) in self.summary().items():
            rows.append(f"{kind:<16}{times:>8}{total * 1e3:>14.3f}"
                        f"{avg * 1e3:>14.3f}")
        return "\n".join(rows)


# -- simulator ---------------------------------------------------------------------


@dataclass
class TickAudit:
    """Everything the replan-protocol and safety cross-checks need per tick."""

    tick: int
    time: float
    had_path: bool
    path_valid: bool
    dt_elapsed: bool
    path_changed_in_window: bool
    replanned: bool
    robot: np.ndarray
    inside_active: bool
    outside_obstacles: bool

    @property
    def safe(self) -> bool:
        return self.inside_active and self.outside_obstacles


@dataclass
class SimResult:
    reached_goal: bool
    final_position: np.ndarray
    ticks_run: int
    violations: int
    replan_ticks: list[int]
    audits: list[TickAudit]
    metrics: MetricsLog
    snapshots_written: list[str] = field(default_factory=list)


class Simulator:
    """Single-writer tick loop over one store/graph pair."""

    def __init__(self, store: RoadmapStore, scenario: Scenario, *,
                 snapshot_dir: str | None = None):
        if scenario.robot.radius is not None and \
                abs(scenario.robot.radius - store.robot_radius) > 1e-9:
            raise SerializationError(
                f"scenario robot radius {scenario.robot.radius} does not "
                f"match roadmap radius {store.robot_radius}")
        self.store = store
        self.scenario = scenario
        self.snapshot_dir = snapshot_dir
        self.graph = ng.build_graph(store)
        self.robot = np.array(scenario.robot.start, dtype=float)
        self.goal = np.array(scenario.robot.goal, dtype=float)
        self.metrics = MetricsLog()
        self._path_rooms: list[int] | None = None
        self._waypoints: np.ndarray | None = None
        self._wp_next = 0
        self._last_plan_t = -math.inf
        self._change_log: list[tuple[float, set[int]]] = []
        self._poses: dict[int, OBB] = {}

    # -- internals -----------------------------------------------------------

    def _active_count(self) -> int:
        return sum(1 for node in self.store.nodes.values()
                   if node.state is NodeState.COMPLETE)

    def _register_initial_obstacles(self) -> set[int]:
        changed: set[int] = set()
        for track in sorted(self.scenario.obstacles,
                            key=lambda tr: tr.obstacle_id):
            obb = track.obb(0.0)
            self._poses[track.obstacle_id] = obb
            self.store.register_obstacle(track.obstacle_id, obb)
            t0 = perf_counter()
            events = self.store.polyhedron_decomposition(
                self.store.overlapping_nodes(obb), track.obstacle_id, obb)
            t_d = perf_counter() - t0
            self.metrics.add(0, "decomposition", self._active_count(), t_d)
            t_g = ng.apply_events(self.graph, self.store, events)
            self.metrics.add(0, "graph_update", self._active_count(), t_g)
            for ev in events:
                changed.update(self._event_ids(ev))
        return changed

    @staticmethod
    def _event_ids(event) -> set[int]:
        if hasattr(event, "parent_id"):
            return {event.parent_id}
        return set(event.restored_ids) | set(event.removed_ids)

    def _move_obstacles(self, tick: int, t: float) -> set[int]:
        changed: set[int] = set()
        for track in sorted(self.scenario.obstacles,
                            key=lambda tr: tr.obstacle_id):
            obb = track.obb(t)
            prev = self._poses[track.obstacle_id]
            if (np.array_equal(obb.center, prev.center)
                    and np.array_equal(obb.rotation, prev.rotation)):
                continue
            self._poses[track.obstacle_id] = obb
            result = self.store.apply_obstacle_motion(track.obstacle_id, obb)
            n = self._active_count()
            self.metrics.add(tick, "restoration", n, result.t_r)
            self.metrics.add(tick, "decomposition", n, result.t_d)
            t_g = ng.apply_events(self.graph, self.store, result.events)
            self.metrics.add(tick, "graph_update", self._active_count(), t_g)
            for ev in result.events:
                changed.update(self._event_ids(ev))
        return changed

    def _path_valid(self) -> bool:
        return (self._path_rooms is not None
                and all(rid in self.graph.rooms for rid in self._path_rooms))

    def _changed_in_window(self, t: float) -> bool:
        if self._path_rooms is None:
            return False
        window = self.scenario.replan_window
        on_path = set(self._path_rooms)
        return any(t - te <= window + 1e-9 and ids & on_path
                   for te, ids in self._change_log)

    def _plan(self, t: float) -> bool:
        """Attempt a fresh plan from the robot's position; True on success."""
        self._last_plan_t = t
        res = ng.plan_path(self.store, self.graph, self.robot.copy(),
                           self.goal)
        if res is None:
            self._path_rooms, self._waypoints = None, None
            return False
        self._path_rooms, self._waypoints = res
        self._wp_next = 1 if len(self._waypoints) > 1 else 0
        return True

    def _advance(self, dist: float) -> None:
        wps = self._waypoints
        while dist > 1e-15 and self._wp_next < len(wps):
            target = wps[self._wp_next]
            seg = target - self.robot
            length = float(np.linalg.norm(seg))
            if length <= dist + 1e-12:
                self.robot = target.copy()
                dist -= length
                self._wp_next += 1
            else:
                self.robot = self.robot + seg * (dist / length)
                dist = 0.0

    def _at_goal(self) -> bool:
        return bool(np.linalg.norm(self.robot - self.goal) <= 1e-9)

    def _audit(self, tick: int, t: float, *, had_path: bool, valid: bool,
               dt_ok: bool, window_hit: bool, replanned: bool) -> TickAudit:
        inside = ng.locate(self.store, self.robot) is not None
        outside = all(
            not obb.inflate(self.store.robot_radius)
                   .contains_point(self.robot, tol=-1e-9)
            for obb in self._poses.values())
        return TickAudit(tick=tick, time=t, had_path=had_path,
                         path_valid=valid, dt_elapsed=dt_ok,
                         path_changed_in_window=window_hit,
                         replanned=replanned, robot=self.robot.copy(),
                         inside_active=inside, outside_obstacles=outside)

    def _snapshot(self, tick: int, t: float) -> str | None:
        if self.snapshot_dir is None or \
                tick not in set(self.scenario.snapshot_ticks):
            return None
        path = os.path.join(self.snapshot_dir, f"snapshot_{tick:05d}.json")
        obstacles = [{
            "id": oid,
            "center": obb.center,
            "yaw": math.atan2(obb.rotation[1, 0], obb.rotation[0, 0]),
            "half_extents": obb.half_extents,
        } for oid, obb in sorted(self._poses.items())]
        export_snapshot(
            path, self.store, self.graph, tick=tick, time=t,
            robot=self.robot, goal=self.goal,
            path_rooms=self._path_rooms,
            path_waypoints=(None if self._waypoints is None
                            else list(self._waypoints)),
            obstacles=obstacles)
        return path

    # -- main loop -------------------------------------------------------------

    def run(self) -> SimResult:
        sc = self.scenario
        audits: list[TickAudit] = []
        replans: list[int] = []
        snapshots: list[str] = []

        changed0 = self._register_initial_obstacles()
        if changed0:
            self._change_log.append((0.0, changed0))
        self._plan(0.0)
        replans.append(0)
        audit = self._audit(0, 0.0, had_path=False, valid=self._path_valid(),
                            dt_ok=True, window_hit=False, replanned=True)
        audits.append(audit)
        snap = self._snapshot(0, 0.0)
        if snap:
            snapshots.append(snap)

        tick = 0
        n_ticks = int(math.floor(sc.duration / sc.dt + 1e-9))
        while tick < n_ticks and not self._at_goal():
            tick += 1
            t = tick * sc.dt
            changed = self._move_obstacles(tick, t)
            if changed:
                self._change_log.append((t, changed))
            self._change_log = [(te, ids) for te, ids in self._change_log
                                if t - te <= sc.replan_window + 1e-9]

            had_path = self._path_rooms is not None
            dt_ok = (t - self._last_plan_t) >= sc.dt - 1e-9
            window_hit = self._changed_in_window(t)
            do_replan = dt_ok and (window_hit if had_path else True)
            if do_replan:
                self._plan(t)
                replans.append(tick)

            valid = self._path_valid()
            if valid:
                self._advance(sc.robot.speed * sc.dt)
            audits.append(self._audit(tick, t, had_path=had_path, valid=valid,
                                      dt_ok=dt_ok, window_hit=window_hit,
                                      replanned=do_replan))
            snap = self._snapshot(tick, t)
            if snap:
                snapshots.append(snap)

        violations = sum(1 for a in audits if not a.safe)
        return SimResult(reached_goal=self._at_goal(),
                         final_position=self.robot.copy(),
                         ticks_run=tick, violations=violations,
                         replan_ticks=replans, audits=audits,
                         metrics=self.metrics, snapshots_written=snapshots)
