"""Versioned JSON artifacts: roadmap files and simulation snapshots.

All documents carry ``schema: 1`` and a ``kind`` tag.  Floats are written
with Python's shortest round-trip repr, so identical inputs produce
byte-identical files and every value re-reads exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .geometry import HPolyhedron
from .roadmap import NodeState, RoadmapStore

SCHEMA_VERSION = 1
ROADMAP_KIND = "polyroad-roadmap"
SNAPSHOT_KIND = "polyroad-snapshot"


class SerializationError(ValueError):
    """Malformed or mismatched artifact file."""


def _vec(x) -> list[float]:
    return [float(v) for v in np.asarray(x, dtype=float)]


def _halfspace_records(poly: HPolyhedron) -> list[dict]:
    c = poly.canonicalize()
    return [{"normal": _vec(a), "offset": float(off)}
            for a, off in zip(c.A, c.b)]


def _poly_from_records(rows) -> HPolyhedron:
    try:
        A = np.array([r["normal"] for r in rows], dtype=float)
        b = np.array([r["offset"] for r in rows], dtype=float)
    except (KeyError, TypeError) as e:
        raise SerializationError(f"bad halfspace record: {e}") from e
    return HPolyhedron(A, b).canonicalize()


def _check_header(doc: dict, kind: str, path: str) -> None:
    if not isinstance(doc, dict) or doc.get("kind") != kind:
        raise SerializationError(f"{path}: not a {kind} file")
    if doc.get("schema") != SCHEMA_VERSION:
        raise SerializationError(
            f"{path}: unsupported schema {doc.get('schema')!r}")


def _dump(doc: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _load(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as e:
        raise SerializationError(f"{path}: invalid JSON ({e})") from e


# -- roadmap files -------------------------------------------------------------


def save_roadmap(path: str, store: RoadmapStore, meta: dict | None = None) -> None:
    """Write a pristine roadmap (root polytopes + build settings) to `path`.

    Only undecomposed stores are serializable: obstacles are transient sim
    state, so a roadmap file always describes the static free-space union.
    """
    for rid in store.roots:
        if store.nodes[rid].state is not NodeState.COMPLETE:
            raise SerializationError(
                "cannot serialize a decomposed roadmap; restore or remove "
                "obstacles first")
    doc = {
        "schema": SCHEMA_VERSION,
        "kind": ROADMAP_KIND,
        "robot_radius": float(store.robot_radius),
        "min_radius": float(store.min_radius),
        "min_volume": float(store.min_volume),
        "meta": meta or {},
        "roots": [{"halfspaces": _halfspace_records(store.nodes[rid].shape)}
                  for rid in sorted(store.roots)],
    }
    _dump(doc, path)


def load_roadmap(path: str) -> tuple[RoadmapStore, dict]:
    """Read a roadmap file back into a store; returns (store, meta)."""
    doc = _load(path)
    _check_header(doc, ROADMAP_KIND, path)
    try:
        polys = [_poly_from_records(rec["halfspaces"]) for rec in doc["roots"]]
        store = RoadmapStore.from_roots(
            polys,
            robot_radius=float(doc["robot_radius"]),
            min_radius=float(doc["min_radius"]),
            min_volume=float(doc["min_volume"]),
        )
    except (KeyError, TypeError) as e:
        raise SerializationError(f"{path}: missing field {e}") from e
    return store, dict(doc.get("meta", {}))


# -- snapshots -----------------------------------------------------------------


def export_snapshot(path: str, store: RoadmapStore, graph=None, *,
                    tick: int = 0, time: float = 0.0, robot=None, goal=None,
                    path_rooms=None, path_waypoints=None,
                    obstacles=None) -> None:
    """Write one structured snapshot of the full dynamic state.

    Contains the active polytopes (halfspaces and vertices), the decomposition
    lineage, current obstacle boxes, the rooms-and-doors graph, and the
    current path, so external tools can render the scene without this package.
    """
    active = []
    for rid in sorted(store.roots):
        for nid in store.active_under(rid):
            shape = store.nodes[nid].shape
            active.append({
                "id": nid,
                "root": store.nodes[nid].root_id,
                "halfspaces": _halfspace_records(shape),
                "vertices": [_vec(v) for v in shape.enumerate_vertices()],
            })
    lineage = [{
        "id": nid,
        "parent": node.parent,
        "state": node.state.name.lower(),
        "split_by": node.split_by,
    } for nid, node in sorted(store.nodes.items())]
    obstacle_recs = []
    for rec in (obstacles or []):
        obstacle_recs.append({
            "id": int(rec["id"]),
            "center": _vec(rec["center"]),
            "yaw": float(rec["yaw"]),
            "half_extents": _vec(rec["half_extents"]),
        })
    graph_doc = None
    if graph is not None:
        graph_doc = {
            "rooms": [{"id": nid, "position": _vec(pos)}
                      for nid, pos in sorted(graph.rooms.items())],
            "edges": [{"a": a, "b": b, "door": _vec(graph.door(a, b))}
                      for a, b in sorted(graph.edge_set())],
        }
    doc = {
        "schema": SCHEMA_VERSION,
        "kind": SNAPSHOT_KIND,
        "tick": int(tick),
        "time": float(time),
        "robot": None if robot is None else _vec(robot),
        "goal": None if goal is None else _vec(goal),
        "path": None if path_rooms is None else {
            "rooms": [int(r) for r in path_rooms],
            "waypoints": [_vec(p) for p in path_waypoints],
        },
        "obstacles": obstacle_recs,
        "active": active,
        "lineage": lineage,
        "graph": graph_doc,
    }
    _dump(doc, path)


def load_snapshot(path: str) -> dict:
    """Parse a snapshot; active entries gain a 'shape' HPolyhedron field."""
    doc = _load(path)
    _check_header(doc, SNAPSHOT_KIND, path)
    for rec in doc.get("active", []):
        rec["shape"] = _poly_from_records(rec["halfspaces"])
    return doc
