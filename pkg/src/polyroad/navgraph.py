"""Rooms-and-doors navigation graph over a polytope roadmap.

Rooms are the roadmap's active (leaf) polytopes, placed at their volume
centroids.  Two rooms are joined by a door when their intersection is wide
enough for the robot: the intersection's Chebyshev radius must reach the
robot radius.  The door waypoint is the intersection's volume centroid, so a
room-door-room polyline always stays inside the union of the two convex
rooms.

The graph can be rebuilt from scratch (`build_graph`) or patched in response
to roadmap mutation events (`update_after_decompose`, `update_after_restore`,
or the `apply_events` dispatcher).  Incremental patching relies on two
monotonicity facts:

* a child polytope is contained in its parent, so any room the child can
  connect to was already a neighbour of the parent (or a sibling);
* sibling children carved off opposite faces of the same box are separated
  by the box's full thickness and can never share a door.

Event replay contract: events from one roadmap mutation must be applied to
the graph before the roadmap store is mutated again, in the order the store
emitted them.  Rooms of nodes that a later event in the same batch will
decompose are patched transiently and corrected when that event is applied;
the final graph always equals a scratch rebuild.
"""

from __future__ import annotations

import heapq
from concurrent.futures import ThreadPoolExecutor
from time import perf_counter

import numpy as np

from .geometry import (EMPTY_RADIUS, HPolyhedron, _cheb_lp,
                       hull_volume_centroid, intersection_probe)
from .roadmap import DecomposeEvent, NodeState, RestoreEvent, RoadmapStore
from .util import worker_count

LOCATE_TOL = 1e-9  # membership slack when resolving a point to a room


class NavGraph:
    """Undirected graph of room ids with a door waypoint per edge."""

    def __init__(self):
        self.rooms: dict[int, np.ndarray] = {}
        self._adj: dict[int, dict[int, np.ndarray]] = {}

    # -- mutation ----------------------------------------------------------------

    def add_room(self, node_id: int, position) -> None:
        self.rooms[node_id] = np.asarray(position, dtype=float)
        self._adj.setdefault(node_id, {})

    def remove_room(self, node_id: int) -> None:
        if node_id not in self.rooms:
            return
        for other in list(self._adj[node_id]):
            del self._adj[other][node_id]
        del self._adj[node_id]
        del self.rooms[node_id]

    def add_edge(self, a: int, b: int, door) -> None:
        door = np.asarray(door, dtype=float)
        self._adj[a][b] = door
        self._adj[b][a] = door

    def remove_edge(self, a: int, b: int) -> None:
        self._adj.get(a, {}).pop(b, None)
        self._adj.get(b, {}).pop(a, None)

    # -- queries -----------------------------------------------------------------

    def neighbors(self, node_id: int) -> list[int]:
        return sorted(self._adj.get(node_id, ()))

    def door(self, a: int, b: int) -> np.ndarray | None:
        return self._adj.get(a, {}).get(b)

    def weight(self, a: int, b: int) -> float:
        door = self._adj[a][b]
        return float(np.linalg.norm(self.rooms[a] - door)
                     + np.linalg.norm(door - self.rooms[b]))

    def edge_set(self) -> set[tuple[int, int]]:
        return {(a, b) for a, nbrs in self._adj.items() for b in nbrs if a < b}

    @property
    def room_count(self) -> int:
        return len(self.rooms)

    @property
    def edge_count(self) -> int:
        return len(self.edge_set())

    def equals(self, other: "NavGraph", tol: float = 1e-6) -> bool:
        """Same rooms, same edges, positions and doors within `tol`."""
        if set(self.rooms) != set(other.rooms):
            return False
        for nid, pos in self.rooms.items():
            if not np.allclose(pos, other.rooms[nid], atol=tol, rtol=0.0):
                return False
        if self.edge_set() != other.edge_set():
            return False
        for a, b in self.edge_set():
            if not np.allclose(self._adj[a][b], other._adj[a][b],
                               atol=tol, rtol=0.0):
                return False
        return True


# -- door test ----------------------------------------------------------------


def connectivity_check(shape_a: HPolyhedron, shape_b: HPolyhedron,
                       min_radius: float) -> np.ndarray | None:
    """Door position joining two polytopes, or None if no passable overlap.

    The overlap is passable when its Chebyshev radius is at least
    `min_radius`.  Rejection runs cheapest-first: bounding boxes, then a
    projection-width bound along every face normal of both shapes (computed
    from their cached vertex sets, this both detects separation and rules out
    overlaps too thin for the robot), and only then the exact intersection.
    """
    min_radius = max(min_radius, EMPTY_RADIUS)
    if not shape_a.aabb.intersects(shape_b.aabb):
        return None
    # Width of the overlap along direction n is at most
    # min(max_a n.x, max_b n.x) - max(min_a n.x, min_b n.x); a ball of radius
    # r inside the overlap forces every width to reach 2r.
    normals = np.vstack([shape_a.A, shape_b.A])
    proj_a = shape_a.enumerate_vertices() @ normals.T
    proj_b = shape_b.enumerate_vertices() @ normals.T
    width = (np.minimum(proj_a.max(axis=0), proj_b.max(axis=0))
             - np.maximum(proj_a.min(axis=0), proj_b.min(axis=0)))
    if float(width.min()) < 2.0 * min_radius:
        return None
    V, A, b = intersection_probe(shape_a, shape_b)
    if V.shape[0] < 4:
        return None
    # Inscribed radius bounds from the vertex set: the overlap's extent along
    # any face normal is at least twice the radius (upper bound), and the ball
    # around the vertex mean is inscribed (lower bound).  The exact LP only
    # runs when the bounds straddle the gate.
    margins = b[:, None] - A @ V.T
    if float(margins.max(axis=1).min()) / 2.0 < min_radius:
        return None
    lb = float(np.min(b - A @ V.mean(axis=0)))
    if lb < min_radius and _cheb_lp(A, b)[1] < min_radius:
        return None
    return hull_volume_centroid(V)[1]


# -- scratch build --------------------------------------------------------------


def build_graph(store: RoadmapStore,
                cache: dict | None = None) -> NavGraph:
    """Build the rooms-and-doors graph for the store's current active set.

    `cache` (optional) memoises door results across rebuilds, keyed by the
    immutable polytopes' serial stamps; passing the same dict to repeated
    builds of mostly-unchanged stores skips redundant geometry.  Door checks
    run on a thread pool when POLYROAD_THREADS is set above 1.
    """
    graph = NavGraph()
    min_radius = store.robot_radius
    actives = {rid: store.active_under(rid) for rid in store.roots}
    for rid in sorted(store.roots):
        for nid in actives[rid]:
            graph.add_room(nid, store.nodes[nid].shape.centroid)

    pairs: list[tuple[int, int]] = []
    for rid in sorted(store.roots):
        root_box = store.nodes[rid].shape.aabb
        for sid in sorted(store.index.candidates_for_box(root_box)):
            if sid < rid:
                continue
            if sid == rid:
                act = actives[rid]
                pairs.extend((a, b) for i, a in enumerate(act)
                             for b in act[i + 1:])
            else:
                pairs.extend((a, b) for a in actives[rid]
                             for b in actives[sid])
    pairs = [(a, b) for a, b in pairs
             if store.nodes[a].shape.aabb.intersects(store.nodes[b].shape.aabb)]

    def check(pair: tuple[int, int]) -> np.ndarray | None:
        a, b = pair
        return connectivity_check(store.nodes[a].shape,
                                  store.nodes[b].shape, min_radius)

    doors: list[np.ndarray | None]
    if cache is None:
        doors = _run_checks(check, pairs)
    else:
        keys = [tuple(sorted((store.nodes[a].shape.serial,
                              store.nodes[b].shape.serial)))
                for a, b in pairs]
        missing = [pair for pair, key in zip(pairs, keys) if key not in cache]
        for pair, door in zip(missing, _run_checks(check, missing)):
            a, b = pair
            key = tuple(sorted((store.nodes[a].shape.serial,
                                store.nodes[b].shape.serial)))
            cache[key] = door
        doors = [cache[key] for key in keys]

    for (a, b), door in zip(pairs, doors):
        if door is not None:
            graph.add_edge(a, b, door)
    return graph


def _run_checks(check, pairs):
    workers = worker_count()
    if workers > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(check, pairs, chunksize=16))
    return [check(pair) for pair in pairs]


# -- incremental updates ----------------------------------------------------------


def update_after_decompose(graph: NavGraph, store: RoadmapStore,
                           event: DecomposeEvent) -> float:
    """Patch the graph after one node split; returns elapsed seconds.

    New edges are only sought among sibling pairs (minus provably-disjoint
    opposite-face pairs) and child x former-parent-neighbour pairs; children
    are contained in the parent, so no other room can have gained a door.
    """
    t0 = perf_counter()
    min_radius = store.robot_radius
    parent = event.parent_id
    children = sorted(event.child_ids)
    former = graph.neighbors(parent) if parent in graph.rooms else []
    graph.remove_room(parent)
    for cid in children:
        graph.add_room(cid, store.nodes[cid].shape.centroid)

    for i, a in enumerate(children):
        fa = store.nodes[a].origin_face
        for b in children[i + 1:]:
            fb = store.nodes[b].origin_face
            if fa is not None and fb is not None and abs(fa - fb) == 3:
                continue
            door = connectivity_check(store.nodes[a].shape,
                                      store.nodes[b].shape, min_radius)
            if door is not None:
                graph.add_edge(a, b, door)

    for cid in children:
        child_shape = store.nodes[cid].shape
        for nid in former:
            if nid not in graph.rooms or nid not in store.nodes:
                continue
            door = connectivity_check(child_shape, store.nodes[nid].shape,
                                      min_radius)
            if door is not None:
                graph.add_edge(cid, nid, door)
    return perf_counter() - t0


def update_after_restore(graph: NavGraph, store: RoadmapStore,
                         event: RestoreEvent) -> float:
    """Patch the graph after subtree restoration; returns elapsed seconds.

    Rooms of deleted descendants are dropped; each restored node gets a room
    and is tested against every roomed node under nearby roots (active rooms
    plus rooms a later event in this batch will replace) and the dropped
    rooms' former partners.
    """
    t0 = perf_counter()
    min_radius = store.robot_radius
    removed = set(event.removed_ids)
    restored = sorted(event.restored_ids)

    partners: set[int] = set()
    for rid in event.removed_ids:
        if rid in graph.rooms:
            partners.update(graph.neighbors(rid))
    for rid in event.removed_ids:
        graph.remove_room(rid)
    partners -= removed

    for nid in restored:
        graph.remove_room(nid)  # restored nodes must start without stale edges
        graph.add_room(nid, store.nodes[nid].shape.centroid)

    checked: set[tuple[int, int]] = set()
    roomed_under: dict[int, list[int]] = {}
    for nid in restored:
        shape = store.nodes[nid].shape
        box = shape.aabb
        cands = set(partners)
        for rid in store.index.candidates_for_box(box):
            if rid not in roomed_under:
                roomed: list[int] = []
                stack = [rid]
                while stack:
                    xid = stack.pop()
                    if xid in graph.rooms:
                        roomed.append(xid)
                    stack.extend(store.nodes[xid].children)
                roomed_under[rid] = roomed
            cands.update(roomed_under[rid])
        cands.discard(nid)
        for pid in sorted(cands):
            key = (min(nid, pid), max(nid, pid))
            if key in checked:
                continue
            checked.add(key)
            if pid not in graph.rooms or pid not in store.nodes:
                continue
            door = connectivity_check(shape, store.nodes[pid].shape,
                                      min_radius)
            if door is not None:
                graph.add_edge(nid, pid, door)
    return perf_counter() - t0


def apply_events(graph: NavGraph, store: RoadmapStore, events) -> float:
    """Apply a mutation-event batch to the graph; returns total elapsed seconds."""
    total = 0.0
    for event in events:
        if isinstance(event, RestoreEvent):
            total += update_after_restore(graph, store, event)
        elif isinstance(event, DecomposeEvent):
            total += update_after_decompose(graph, store, event)
        else:
            raise TypeError(f"unknown roadmap event: {event!r}")
    return total


# -- queries ----------------------------------------------------------------------


def locate(store: RoadmapStore, p) -> int | None:
    """Active node containing point `p` (lowest id on shared faces), or None."""
    p = np.asarray(p, dtype=float)
    hits: list[int] = []
    for rid in store.index.stab(p):
        stack = [rid]
        while stack:
            nid = stack.pop()
            node = store.nodes[nid]
            if not node.shape.contains_point(p, tol=LOCATE_TOL):
                continue
            if node.state is NodeState.COMPLETE:
                hits.append(nid)
            else:
                stack.extend(node.children)
    return min(hits) if hits else None


def astar(graph: NavGraph, start_room: int, goal_room: int,
          start_point=None, goal_point=None
          ) -> tuple[list[int], np.ndarray] | None:
    """Shortest room sequence and waypoint polyline, or None if unreachable.

    Waypoints run start point, then door / room-centre alternately, ending at
    the goal point (which replaces the goal room's centre); every segment
    stays within a single convex room, so the polyline is collision-free by
    construction.  Ties break deterministically on (f, h, room id).
    """
    if start_room not in graph.rooms or goal_room not in graph.rooms:
        return None
    goal_pos = graph.rooms[goal_room]

    def h(nid: int) -> float:
        return float(np.linalg.norm(graph.rooms[nid] - goal_pos))

    g_score = {start_room: 0.0}
    came: dict[int, int] = {}
    open_heap = [(h(start_room), h(start_room), start_room)]
    closed: set[int] = set()
    while open_heap:
        f, _, nid = heapq.heappop(open_heap)
        if nid in closed:
            continue
        if nid == goal_room:
            break
        closed.add(nid)
        for nbr in graph.neighbors(nid):
            if nbr in closed:
                continue
            cand = g_score[nid] + graph.weight(nid, nbr)
            if cand < g_score.get(nbr, np.inf) - 1e-15:
                g_score[nbr] = cand
                came[nbr] = nid
                heapq.heappush(open_heap, (cand + h(nbr), h(nbr), nbr))
    else:
        return None

    ids = [goal_room]
    while ids[-1] != start_room:
        ids.append(came[ids[-1]])
    ids.reverse()
    return ids, _waypoints(graph, ids, start_point, goal_point)


def _waypoints(graph: NavGraph, ids: list[int], start_point,
               goal_point) -> np.ndarray:
    pts = [np.asarray(start_point, dtype=float) if start_point is not None
           else graph.rooms[ids[0]]]
    for a, b in zip(ids, ids[1:]):
        pts.append(graph.door(a, b))
        pts.append(graph.rooms[b])
    if goal_point is not None:
        goal_pt = np.asarray(goal_point, dtype=float)
        if len(ids) == 1:
            pts.append(goal_pt)
        else:
            pts[-1] = goal_pt
    return np.vstack(pts)


def plan_path(store: RoadmapStore, graph: NavGraph, start_point, goal_point
              ) -> tuple[list[int], np.ndarray] | None:
    """Locate both endpoints, run A*, and trim redundant end rooms.

    When the start point already lies inside the second room on the path (it
    often does: points in a fat room overlap locate to the lower id), routing
    via the first door would walk the robot backwards; such leading rooms are
    dropped, and likewise trailing rooms the goal point has already reached.
    Every remaining segment still joins two points of one convex room.
    """
    start_point = np.asarray(start_point, dtype=float)
    goal_point = np.asarray(goal_point, dtype=float)
    start_room = locate(store, start_point)
    goal_room = locate(store, goal_point)
    if start_room is None or goal_room is None:
        return None
    res = astar(graph, start_room, goal_room,
                start_point=start_point, goal_point=goal_point)
    if res is None:
        return None
    ids = res[0]
    while len(ids) >= 2 and store.nodes[ids[1]].shape.contains_point(
            start_point, tol=LOCATE_TOL):
        ids = ids[1:]
    while len(ids) >= 2 and store.nodes[ids[-2]].shape.contains_point(
            goal_point, tol=LOCATE_TOL):
        ids = ids[:-1]
    return ids, _waypoints(graph, ids, start_point, goal_point)
