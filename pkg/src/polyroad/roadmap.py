"""Dynamic polyhedral roadmap: hierarchy of convex free-space pieces.

Roots come from the static build.  When an inflated obstacle box overlaps a
complete polyhedron, the polyhedron is decomposed: one candidate child per box
face (parent clipped to the face's far side), filtered by a quality gate and a
symmetric redundancy test.  Children may be decomposed in turn by other
obstacles.  When an obstacle moves away, every node it split is restored in
place: its subtree is deleted, its state flips back to complete, and it is
re-decomposed by whatever other obstacles still overlap it.  Restoring the last
obstacle therefore reproduces the original geometry exactly.

The store tracks the active set (complete nodes = leaves of the hierarchy),
a segment-tree index over root AABBs, and per-obstacle bookkeeping of split
nodes.  All mutation goes through apply_obstacle_motion / the two algorithm
entry points, each returning event records the navigation graph replays.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import OBB, EMPTY_RADIUS, VERTEX_TOL, HPolyhedron
from .segtree import SegTree3D


class RoadmapError(ValueError):
    """Invalid roadmap operation."""


class NodeState(Enum):
    COMPLETE = "complete"
    DECOMPOSED = "decomposed"


def is_good_poly(poly: HPolyhedron, min_radius: float, min_volume: float) -> bool:
    """Quality gate: big enough for the robot and not a sliver."""
    if poly.is_empty:
        return False
    if not poly.radius_at_least(min_radius):
        return False
    return poly.volume >= min_volume


@dataclass
class PolyNode:
    node_id: int
    shape: HPolyhedron
    root_id: int
    parent: int | None = None
    children: list[int] = field(default_factory=list)
    state: NodeState = NodeState.COMPLETE
    depth: int = 0
    split_by: int | None = None        # obstacle id that decomposed this node
    split_obb: OBB | None = None       # inflated OBB pose at split time
    origin_face: int | None = None     # face index (0..5) that created this node


@dataclass
class Obstacle:
    obstacle_id: int
    obb: OBB
    split_nodes: set[int] = field(default_factory=set)


@dataclass(frozen=True)
class DecomposeEvent:
    parent_id: int
    child_ids: tuple[int, ...]


@dataclass(frozen=True)
class RestoreEvent:
    restored_ids: tuple[int, ...]
    removed_ids: tuple[int, ...]


@dataclass(frozen=True)
class MotionResult:
    events: tuple
    t_d: float  # decomposition seconds
    t_r: float  # restoration seconds


class RoadmapStore:
    """Owns the polyhedron hierarchy, the root index, and obstacle state."""

    def __init__(self, robot_radius: float, min_radius: float, min_volume: float,
                 meta: dict | None = None):
        if robot_radius < 0:
            raise RoadmapError("robot radius must be nonnegative")
        self.robot_radius = float(robot_radius)
        self.min_radius = float(min_radius)
        self.min_volume = float(min_volume)
        self.nodes: dict[int, PolyNode] = {}
        self.roots: list[int] = []
        self.active: set[int] = set()
        self.obstacles: dict[int, Obstacle] = {}
        self.index: SegTree3D = SegTree3D([])
        self.meta = dict(meta or {})
        self._next_id = 0

    @classmethod
    def from_roots(cls, polys, robot_radius: float, min_radius: float,
                   min_volume: float, meta: dict | None = None) -> "RoadmapStore":
        store = cls(robot_radius, min_radius, min_volume, meta)
        for poly in polys:
            poly = poly.canonicalize()
            if poly.is_empty:
                raise RoadmapError("root polyhedra must be nonempty")
            nid = store._next_id
            store._next_id += 1
            store.nodes[nid] = PolyNode(node_id=nid, shape=poly, root_id=nid)
            store.roots.append(nid)
            store.active.add(nid)
        store.rebuild_index()
        return store

    def rebuild_index(self):
        self.index = SegTree3D(
            (rid, self.nodes[rid].shape.aabb) for rid in self.roots
        )

    # -- queries ---------------------------------------------------------------

    def node(self, nid: int) -> PolyNode:
        return self.nodes[nid]

    def active_under(self, root_id: int) -> list[int]:
        out = []
        stack = [root_id]
        while stack:
            nid = stack.pop()
            node = self.nodes[nid]
            if node.state is NodeState.COMPLETE:
                out.append(nid)
            else:
                stack.extend(node.children)
        return sorted(out)

    def _good(self, poly: HPolyhedron) -> bool:
        return is_good_poly(poly, self.min_radius, self.min_volume)

    def _intersects(self, shape: HPolyhedron, box: OBB, box_poly: HPolyhedron) -> bool:
        """Open-interior overlap: shared faces do not count.

        Vertex arithmetic settles the common fat-overlap and face-separated
        cases with the same verdict the exact emptiness test would reach; only
        near-degenerate configurations pay for the full intersection.
        """
        if not shape.aabb.intersects(box.aabb):
            return False
        sep = 2.0 * (EMPTY_RADIUS - VERTEX_TOL)
        V = shape.enumerate_vertices()
        M = box_poly.b - V @ box_poly.A.T  # per-vertex margins inside the box
        if np.any(np.max(M, axis=0) < sep):
            return False  # a box face separates: overlap thinner than empty
        W = box_poly.enumerate_vertices()
        if np.any(shape.b - np.min(W @ shape.A.T, axis=0) < sep):
            return False  # a shape face separates
        mean = V.mean(axis=0)
        deepest = V[int(np.argmax(np.min(M, axis=1)))]
        for p in (box.center, mean, 0.5 * (deepest + mean)):
            if (np.min(shape.b - shape.A @ p) >= EMPTY_RADIUS
                    and np.min(box_poly.b - box_poly.A @ p) >= EMPTY_RADIUS):
                return True  # certified inscribed ball: nonempty overlap
        inter = shape.intersect(box_poly)
        return not inter.is_empty

    def overlapping_nodes(self, obb: OBB) -> list[int]:
        """Roots whose shape overlaps the inflated obstacle box."""
        infl = obb.inflate(self.robot_radius)
        box_poly = infl.to_polyhedron()
        cands = self.index.candidates_for_box(infl.aabb)
        return [rid for rid in sorted(cands)
                if self._intersects(self.nodes[rid].shape, infl, box_poly)]

    # -- decomposition ------------------------------------------------------------

    def decompose_one(self, node_id: int, obstacle_id: int, obb: OBB) -> DecomposeEvent:
        """Split one complete node by the 6 faces of the inflated obstacle box."""
        node = self.nodes[node_id]
        if node.state is not NodeState.COMPLETE:
            raise RoadmapError(f"node {node_id} is already decomposed")
        infl = obb.inflate(self.robot_radius)
        A6, b6 = infl.face_rows()
        kept: list[tuple[int, HPolyhedron]] = []
        for k in range(6):
            cand = node.shape.clip(-A6[k:k + 1], -b6[k:k + 1],
                                   cull_radius=self.min_radius)
            if not self._good(cand):
                continue
            # cand and earlier keeps all live inside the parent, so containment
            # reduces to a single support test against the defining face
            V = cand.enumerate_vertices()
            if any(float(np.min(V @ A6[kj])) >= b6[kj] - 1e-9 for kj, _ in kept):
                continue
            kept = [
                (kj, cj) for kj, cj in kept
                if float(np.min(cj.enumerate_vertices() @ A6[k])) < b6[k] - 1e-9
            ]
            kept.append((k, cand))
        child_ids = []
        for k, cand in kept:
            cid = self._next_id
            self._next_id += 1
            self.nodes[cid] = PolyNode(
                node_id=cid, shape=cand, root_id=node.root_id, parent=node_id,
                depth=node.depth + 1, origin_face=k,
            )
            node.children.append(cid)
            child_ids.append(cid)
            self.active.add(cid)
        node.state = NodeState.DECOMPOSED
        node.split_by = obstacle_id
        node.split_obb = infl
        self.active.discard(node_id)
        self.obstacles[obstacle_id].split_nodes.add(node_id)
        return DecomposeEvent(parent_id=node_id, child_ids=tuple(child_ids))

    def polyhedron_decomposition(self, node_ids, obstacle_id: int,
                                 obb: OBB) -> list[DecomposeEvent]:
        """Recursive decomposition walk over the given subtrees."""
        self.register_obstacle(obstacle_id, obb)
        infl = obb.inflate(self.robot_radius)
        box_poly = infl.to_polyhedron()
        events: list[DecomposeEvent] = []

        def walk(nid: int):
            node = self.nodes[nid]
            if not self._intersects(node.shape, infl, box_poly):
                return
            if node.state is NodeState.COMPLETE:
                events.append(self.decompose_one(nid, obstacle_id, obb))
            else:
                for child in list(node.children):
                    walk(child)

        for nid in node_ids:
            walk(nid)
        return events

    # -- restoration ----------------------------------------------------------------

    def polyhedron_restoration(self, obstacle_id: int) -> list:
        """Undo every split owned by this obstacle, re-splitting by the others."""
        if obstacle_id not in self.obstacles:
            raise RoadmapError(f"unknown obstacle {obstacle_id}")
        obs = self.obstacles[obstacle_id]
        targets = sorted(obs.split_nodes)
        if not targets:
            return []
        removed: list[int] = []
        for nid in targets:
            node = self.nodes[nid]
            stack = list(node.children)
            while stack:
                rid = stack.pop()
                sub = self.nodes.pop(rid)
                removed.append(rid)
                self.active.discard(rid)
                if sub.state is NodeState.DECOMPOSED:
                    self.obstacles[sub.split_by].split_nodes.discard(rid)
                    stack.extend(sub.children)
            node.children = []
            node.state = NodeState.COMPLETE
            node.split_by = None
            node.split_obb = None
            self.active.add(nid)
        obs.split_nodes.clear()
        events: list = [RestoreEvent(tuple(targets), tuple(sorted(removed)))]
        for nid in targets:
            for oid in sorted(self.obstacles):
                if oid == obstacle_id:
                    continue
                events.extend(
                    self.polyhedron_decomposition([nid], oid, self.obstacles[oid].obb)
                )
        return events

    # -- obstacle motion ---------------------------------------------------------------

    def register_obstacle(self, obstacle_id: int, obb: OBB):
        obs = self.obstacles.get(obstacle_id)
        if obs is None:
            self.obstacles[obstacle_id] = Obstacle(obstacle_id, obb)
        else:
            obs.obb = obb

    def remove_obstacle(self, obstacle_id: int) -> list:
        events = self.polyhedron_restoration(obstacle_id)
        del self.obstacles[obstacle_id]
        return events

    def apply_obstacle_motion(self, obstacle_id: int, new_obb: OBB) -> MotionResult:
        """Restore at the old pose (if known), then decompose at the new pose."""
        t0 = time.perf_counter()
        events: list = []
        if obstacle_id in self.obstacles:
            events.extend(self.polyhedron_restoration(obstacle_id))
        t_r = time.perf_counter() - t0
        self.register_obstacle(obstacle_id, new_obb)
        t1 = time.perf_counter()
        targets = self.overlapping_nodes(new_obb)
        events.extend(self.polyhedron_decomposition(targets, obstacle_id, new_obb))
        t_d = time.perf_counter() - t1
        return MotionResult(events=tuple(events), t_d=t_d, t_r=t_r)

    # -- integrity helpers -------------------------------------------------------------

    def active_signature(self):
        """Multiset of canonical row signatures over active shapes (id-free)."""
        return sorted(self.nodes[nid].shape.row_signature() for nid in self.active)

    def structure_signature(self):
        """Full structural state: ids, states, shapes, lineage."""
        out = []
        for nid in sorted(self.nodes):
            node = self.nodes[nid]
            out.append((
                nid, node.parent, node.state.value, tuple(sorted(node.children)),
                node.split_by, node.shape.row_signature(),
            ))
        return out
