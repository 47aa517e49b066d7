import math

import numpy as np
import pytest

from polyroad.geometry import AABB, OBB, HPolyhedron
from polyroad.roadmap import (
    DecomposeEvent,
    NodeState,
    RestoreEvent,
    RoadmapError,
    RoadmapStore,
    is_good_poly,
)

CUBE = HPolyhedron.from_aabb(AABB([0, 0, 0], [1, 1, 1]))


def cube_store(r=0.0, min_radius=0.02, min_volume=1e-5):
    return RoadmapStore.from_roots([CUBE], robot_radius=r,
                                   min_radius=min_radius, min_volume=min_volume)


def center_obb(half=0.1):
    return OBB([0.5, 0.5, 0.5], np.eye(3), [half, half, half])


def random_obb(rng, lo=0.1, hi=0.9, half_lo=0.05, half_hi=0.25):
    c = rng.uniform(lo, hi, 3)
    yaw = rng.uniform(0, 2 * math.pi)
    R = np.array([[math.cos(yaw), -math.sin(yaw), 0],
                  [math.sin(yaw), math.cos(yaw), 0],
                  [0, 0, 1]])
    return OBB(c, R, rng.uniform(half_lo, half_hi, 3))


# -------------------------------------------------------------- is_good_poly


def test_good_poly_cube_passes():
    assert is_good_poly(CUBE, 0.3, 0.064)


def test_good_poly_thin_slab_fails_radius():
    slab = HPolyhedron.from_aabb(AABB([0, 0, 0], [0.05, 1, 1]))
    assert not is_good_poly(slab, 0.2, 1e-6)


def test_good_poly_empty_fails():
    rows = np.vstack([np.eye(3), -np.eye(3), [[-1.0, 0, 0]]])
    offs = np.array([1, 1, 1, 0, 0, 0, -2.0])
    poly = HPolyhedron(rows, offs)
    poly.bounded = True
    assert not is_good_poly(poly, 0.01, 1e-9)


# ------------------------------------------------------------- decompose_one


def test_decompose_centered_box_six_slabs():
    store = cube_store()
    ev = store.apply_obstacle_motion(1, center_obb()).events[0]
    assert isinstance(ev, DecomposeEvent)
    assert len(ev.child_ids) == 6
    for cid in ev.child_ids:
        assert store.nodes[cid].shape.volume == pytest.approx(0.4)
    assert store.nodes[ev.parent_id].state is NodeState.DECOMPOSED
    assert store.active == set(ev.child_ids)


def test_decompose_respects_robot_radius():
    store = cube_store(r=0.1)
    ev = store.apply_obstacle_motion(1, center_obb(0.1)).events[0]
    # inflated box is [0.3,0.7]^3, slabs are 0.3 thick
    for cid in ev.child_ids:
        assert store.nodes[cid].shape.volume == pytest.approx(0.3)


def test_decompose_redundant_candidates_dropped():
    # parent = cube cut by x+y <= 1.4; a z-column at [0.6,0.9]^2 makes the
    # x>=0.9 and y>=0.9 strips subsets of the y<=0.6 / x<=0.6 pieces
    s2 = math.sqrt(2)
    parent = CUBE.clip(np.array([[1.0, 1, 0]]) / s2, np.array([1.4 / s2]))
    store = RoadmapStore.from_roots([parent], robot_radius=0.0,
                                    min_radius=0.01, min_volume=1e-4)
    obb = OBB([0.75, 0.75, 0.5], np.eye(3), [0.15, 0.15, 1.5])
    ev = store.apply_obstacle_motion(7, obb).events[0]
    assert len(ev.child_ids) == 2
    faces = sorted(store.nodes[c].origin_face for c in ev.child_ids)
    assert faces == [3, 4]  # the -x and -y pieces survive
    # kept pieces still cover everything outside the box
    rng = np.random.default_rng(1)
    pts = rng.uniform(0, 1, (20000, 3))
    pts = pts[parent.contains_points(pts)]
    outside = ~obb.to_polyhedron().contains_points(pts, tol=-1e-12)
    in_any = np.zeros(len(pts), dtype=bool)
    for cid in ev.child_ids:
        in_any |= store.nodes[cid].shape.contains_points(pts, tol=1e-9)
    assert in_any[outside].all()


def test_decompose_obb_covering_parent_leaves_nothing():
    store = cube_store()
    ev = store.apply_obstacle_motion(9, OBB([0.5, 0.5, 0.5], np.eye(3),
                                            [2, 2, 2])).events[0]
    assert ev.child_ids == ()
    assert store.active == set()


def test_decompose_already_decomposed_raises():
    store = cube_store()
    store.apply_obstacle_motion(1, center_obb())
    with pytest.raises(RoadmapError):
        store.decompose_one(0, 2, center_obb())


def test_decompose_recurses_only_into_touched_children():
    store = cube_store()
    store.apply_obstacle_motion(1, center_obb(0.1))
    ev = store.apply_obstacle_motion(
        2, OBB([0.8, 0.5, 0.5], np.eye(3), [0.05, 0.05, 0.05])
    ).events
    parents = [e.parent_id for e in ev if isinstance(e, DecomposeEvent)]
    assert all(store.nodes[p].depth == 1 for p in parents)
    # face children not overlapping obstacle 2 stay complete
    assert any(store.nodes[n].depth == 1 for n in store.active)
    assert any(store.nodes[n].depth == 2 for n in store.active)


# ------------------------------------------------------------- restoration


def test_restore_single_obstacle_exact_identity():
    store = cube_store()
    sig0 = store.structure_signature()
    store.apply_obstacle_motion(1, center_obb())
    events = store.polyhedron_restoration(1)
    assert isinstance(events[0], RestoreEvent)
    assert store.structure_signature() == sig0
    assert store.active == {0}


def test_restore_unknown_obstacle_raises():
    store = cube_store()
    with pytest.raises(RoadmapError):
        store.polyhedron_restoration(42)


def test_restore_resplits_by_remaining_obstacle():
    store = cube_store()
    store.apply_obstacle_motion(1, center_obb(0.1))
    store.apply_obstacle_motion(2, OBB([0.8, 0.5, 0.5], np.eye(3),
                                       [0.05, 0.05, 0.05]))
    events = store.polyhedron_restoration(1)
    kinds = [type(e).__name__ for e in events]
    assert kinds[0] == "RestoreEvent"
    assert "DecomposeEvent" in kinds
    # the root is now split directly by obstacle 2 at depth 1
    assert store.nodes[0].split_by == 2
    assert all(store.nodes[n].depth == 1 for n in store.active)


def test_remove_both_obstacles_returns_to_original():
    store = cube_store()
    sig0 = store.active_signature()
    store.apply_obstacle_motion(1, center_obb(0.1))
    store.apply_obstacle_motion(2, OBB([0.75, 0.55, 0.5], np.eye(3),
                                       [0.07, 0.07, 0.07]))
    store.remove_obstacle(2)
    store.remove_obstacle(1)
    assert store.active_signature() == sig0
    assert store.active == {0}


def test_restore_resplits_by_still_present_obstacle():
    # bare restoration keeps the other obstacle registered, so the freed
    # nodes are immediately re-split by it
    store = cube_store()
    store.apply_obstacle_motion(1, center_obb(0.1))
    store.apply_obstacle_motion(2, OBB([0.75, 0.55, 0.5], np.eye(3),
                                       [0.07, 0.07, 0.07]))
    store.polyhedron_restoration(2)
    store.polyhedron_restoration(1)
    assert store.nodes[0].split_by == 2
    infl = store.obstacles[2].obb.to_polyhedron()
    for nid in store.active:
        assert store.nodes[nid].shape.intersect(infl).is_empty


def test_restore_round_trips_random():
    rng = np.random.default_rng(17)
    for _ in range(25):
        store = cube_store()
        sig0 = store.structure_signature()
        obb = random_obb(rng)
        store.apply_obstacle_motion(5, obb)
        store.polyhedron_restoration(5)
        assert store.structure_signature() == sig0


# --------------------------------------------------------- obstacle motion


def test_motion_away_restores_only():
    store = cube_store()
    store.apply_obstacle_motion(1, center_obb())
    res = store.apply_obstacle_motion(1, OBB([10, 10, 10], np.eye(3),
                                             [0.1, 0.1, 0.1]))
    kinds = [type(e).__name__ for e in res.events]
    assert kinds == ["RestoreEvent"]
    assert store.active == {0}


def test_motion_move_back_same_geometry():
    a = cube_store(r=0.1)
    b = cube_store(r=0.1)
    pose = OBB([0.4, 0.4, 0.5], np.eye(3), [0.08, 0.08, 0.08])
    a.apply_obstacle_motion(3, pose)
    b.apply_obstacle_motion(3, OBB([0.7, 0.6, 0.4], np.eye(3), [0.08, 0.08, 0.08]))
    b.apply_obstacle_motion(3, pose)
    assert a.active_signature() == b.active_signature()


def test_motion_point_membership_oracle():
    rng = np.random.default_rng(23)
    store = cube_store(r=0.05, min_radius=0.01, min_volume=1e-6)
    pts = rng.uniform(0, 1, (4000, 3))
    for step in range(8):
        obb = random_obb(rng, half_lo=0.05, half_hi=0.15)
        store.apply_obstacle_motion(1, obb)
        infl = obb.inflate(0.05).to_polyhedron()
        in_box = infl.contains_points(pts, tol=-1e-9)
        in_any = np.zeros(len(pts), dtype=bool)
        for nid in store.active:
            in_any |= store.nodes[nid].shape.contains_points(pts, tol=1e-9)
        # nothing active may reach strictly inside the inflated box
        assert not (in_any & in_box).any()


def test_overlapping_nodes_returns_roots():
    polys = [
        HPolyhedron.from_aabb(AABB([0, 0, 0], [1, 1, 1])),
        HPolyhedron.from_aabb(AABB([2, 0, 0], [3, 1, 1])),
    ]
    store = RoadmapStore.from_roots(polys, 0.0, 0.02, 1e-5)
    hits = store.overlapping_nodes(OBB([0.5, 0.5, 0.5], np.eye(3),
                                       [0.1, 0.1, 0.1]))
    assert hits == [0]
    both = store.overlapping_nodes(OBB([1.5, 0.5, 0.5], np.eye(3),
                                       [0.7, 0.1, 0.1]))
    assert both == [0, 1]
    # face contact only: open-interior overlap excludes it
    touch = store.overlapping_nodes(OBB([1.5, 0.5, 0.5], np.eye(3),
                                        [0.5, 0.1, 0.1]))
    assert touch == []


def test_intersects_matches_exact_emptiness():
    """Fast overlap certificates must agree with the exact intersection test."""
    rng = np.random.default_rng(3)
    store = RoadmapStore(0.1, 0.1, 1e-3)
    for _ in range(300):
        lo = rng.uniform(0, 2, 3)
        shape = HPolyhedron.from_aabb(AABB(lo, lo + rng.uniform(0.3, 1.5, 3)))
        if rng.random() < 0.5:  # cut a corner so it is not a pure box
            n = rng.normal(size=3)
            n /= np.linalg.norm(n)
            off = float(n @ shape.aabb.center) + rng.uniform(0.1, 0.5)
            cut = shape.clip(n[None, :], np.array([off]))
            if not cut.is_empty:
                shape = cut
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        if np.linalg.det(q) < 0:
            q[:, 0] = -q[:, 0]
        box = OBB(rng.uniform(-0.5, 3.0, 3), q, rng.uniform(0.05, 0.8, 3))
        box_poly = box.to_polyhedron()
        got = store._intersects(shape, box, box_poly)
        want = not shape.intersect(box_poly).is_empty
        assert got == want


# ----------------------------------------------------------------- invariants


def test_hierarchy_children_contained_in_parent():
    rng = np.random.default_rng(31)
    store = cube_store(r=0.05, min_radius=0.01, min_volume=1e-6)
    for i in range(3):
        store.apply_obstacle_motion(i, random_obb(rng, half_lo=0.04, half_hi=0.12))
    for nid, node in store.nodes.items():
        if node.parent is not None:
            parent = store.nodes[node.parent]
            assert parent.shape.contains_polyhedron(node.shape, tol=1e-7)


def test_active_set_equals_complete_leaves():
    rng = np.random.default_rng(37)
    store = cube_store(r=0.05, min_radius=0.01, min_volume=1e-6)
    for i in range(4):
        store.apply_obstacle_motion(i % 2, random_obb(rng))
        complete = {n for n, nd in store.nodes.items()
                    if nd.state is NodeState.COMPLETE}
        assert store.active == complete
        for nid, nd in store.nodes.items():
            if nd.state is NodeState.DECOMPOSED:
                assert nd.split_by is not None
                assert nid in store.obstacles[nd.split_by].split_nodes


def test_split_coverage_sampled():
    # kept children + obstacle box cover the parent minus sliver mass < 1%
    rng = np.random.default_rng(41)
    for _ in range(20):
        store = cube_store(r=0.0, min_radius=0.02, min_volume=1e-4)
        obb = random_obb(rng, half_lo=0.08, half_hi=0.3)
        res = store.apply_obstacle_motion(1, obb)
        if not res.events:
            continue
        ev = res.events[0]
        pts = rng.uniform(0, 1, (30000, 3))
        box = obb.to_polyhedron()
        outside = ~box.contains_points(pts, tol=1e-12)
        in_any = np.zeros(len(pts), dtype=bool)
        for cid in ev.child_ids:
            in_any |= store.nodes[cid].shape.contains_points(pts, tol=1e-9)
        missed = outside & ~in_any
        assert missed.sum() <= 0.01 * max(outside.sum(), 1)
        # no child reaches strictly inside the box
        assert not (in_any & box.contains_points(pts, tol=-1e-6)).any()
