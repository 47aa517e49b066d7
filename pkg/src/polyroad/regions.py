"""Convex region inflation around a seed point, IRIS style.

Alternates two steps: tangent separating hyperplanes push every occupied cell
out of the candidate region, then the maximum-volume inscribed ellipsoid of
that region drives the next round of hyperplanes.  Termination on stalled
ellipsoid growth; if the region ever stops containing the seed we roll back to
the last one that did.

The ellipsoid step solves max log det(B) s.t. ||B a_i|| + a_i . d <= b_i with
cvxpy/Clarabel; a parametric problem is cached per constraint count so repeat
solves skip symbolic compilation.  On any solver hiccup we fall back to the
Chebyshev ball, which satisfies the same contract with less volume.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import cvxpy as cp
import numpy as np

from .geometry import (
    AABB,
    DegenerateGeometryError,
    EMPTY_RADIUS,
    Ellipsoid,
    GeometryError,
    HPolyhedron,
    Hyperplane,
)
from .gridmap import GridError, GridMap

log = logging.getLogger(__name__)

_CD_SWEEPS = 50          # coordinate-descent sweeps for closest-point QPs
_SEED_TOL = 1e-6         # seed containment tolerance during inflation


@dataclass(frozen=True)
class InflationConfig:
    max_iterations: int = 5
    volume_growth_tol: float = 0.02
    bbox_halfwidth: float = 4.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.volume_growth_tol <= 0:
            raise ValueError("volume_growth_tol must be positive")
        if self.bbox_halfwidth <= 0:
            raise ValueError("bbox_halfwidth must be positive")


@dataclass(frozen=True)
class ObstacleCell:
    """Axis-aligned occupied box (one grid cell, possibly clipped)."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(3).copy()
        hi = np.asarray(self.hi, dtype=float).reshape(3).copy()
        if np.any(hi <= lo):
            raise GeometryError("obstacle cell must have positive extent")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def corners(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))


# ---------------------------------------------------------------------------
# separating hyperplanes


def _closest_points_metric(Q, c, lo, hi, sweeps=_CD_SWEEPS):
    """Coordinate descent on min (x-c)^T Q (x-c) over boxes, vectorized."""
    X = np.clip(np.broadcast_to(c, lo.shape).copy(), lo, hi)
    for _ in range(sweeps):
        for j in range(3):
            resid = (X - c) @ Q[j] - Q[j, j] * (X[:, j] - c[j])
            X[:, j] = np.clip(c[j] - resid / Q[j, j], lo[:, j], hi[:, j])
    return X


def separating_hyperplanes(e: Ellipsoid, obstacles) -> list[Hyperplane]:
    """Tangent planes that exclude every obstacle from the free side.

    Obstacles are processed in increasing ellipsoid-metric distance; ones
    already excluded by an earlier plane are skipped.  Each plane's offset is
    pulled back to the generating obstacle's support so the whole box sits on
    the >= side, guaranteeing the later polytope excludes it exactly.
    """
    obstacles = list(obstacles)
    if not obstacles:
        return []
    c = e.center
    M = np.linalg.inv(e.shape)
    Q = M.T @ M
    lo = np.array([o.lo for o in obstacles])
    hi = np.array([o.hi for o in obstacles])
    if np.any(np.all((lo <= c) & (c <= hi), axis=1)):
        raise GeometryError("ellipsoid center lies inside an obstacle")
    corners = np.array([o.corners for o in obstacles])  # (N, 8, 3)
    X = _closest_points_metric(Q, c, lo, hi)
    d2 = np.einsum("ni,ij,nj->n", X - c, Q, X - c)
    order = np.lexsort((np.arange(len(obstacles)), d2))
    excluded = np.zeros(len(obstacles), dtype=bool)
    planes: list[Hyperplane] = []
    for i in order:
        if excluded[i]:
            continue
        if d2[i] < 1e-18:
            raise GeometryError("ellipsoid center touches an obstacle")
        # polish the winner a little harder before taking its gradient
        xi = _closest_points_metric(Q, c, lo[i:i + 1], hi[i:i + 1], sweeps=200)[0]
        w = Q @ (xi - c)
        a = w / np.linalg.norm(w)
        beta = float(np.min(corners[i] @ a))
        planes.append(Hyperplane(a, beta))
        min_support = np.min(corners @ a, axis=1)
        excluded |= min_support >= beta
    return planes


# ---------------------------------------------------------------------------
# maximum-volume inscribed ellipsoid

_MVIE_CACHE: dict[int, tuple] = {}


def _mvie_problem(m: int):
    prob = _MVIE_CACHE.get(m)
    if prob is None:
        A = cp.Parameter((m, 3))
        b = cp.Parameter(m)
        B = cp.Variable((3, 3), PSD=True)
        d = cp.Variable(3)
        constraints = [cp.norm(A @ B, axis=1) + A @ d <= b]
        problem = cp.Problem(cp.Maximize(cp.log_det(B)), constraints)
        prob = (problem, A, b, B, d)
        _MVIE_CACHE[m] = prob
    return prob


def _chebyshev_ball(P: HPolyhedron) -> Ellipsoid:
    c, r = P.chebyshev()
    if r < EMPTY_RADIUS:
        raise DegenerateGeometryError("polyhedron too thin for an ellipsoid")
    return Ellipsoid(r * np.eye(3), c)


def mvie(P: HPolyhedron) -> Ellipsoid:
    """Maximum-volume inscribed ellipsoid (contained within 1e-7 per face)."""
    P = P.canonicalize()
    if P.is_empty or not P.radius_at_least(EMPTY_RADIUS):
        raise DegenerateGeometryError("mvie needs a polytope with interior")
    m_real = P.A.shape[0]
    m = max(4, -(-m_real // 4) * 4)  # bucket to multiples of 4 for problem reuse
    A = np.vstack([P.A, np.repeat(P.A[-1:], m - m_real, axis=0)])
    b = np.concatenate([P.b, np.repeat(P.b[-1:], m - m_real)])
    problem, A_p, b_p, B_v, d_v = _mvie_problem(m)
    A_p.value = A
    b_p.value = b
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.error.SolverError:
        log.warning("mvie solver error; falling back to Chebyshev ball")
        return _chebyshev_ball(P)
    if B_v.value is None or d_v.value is None:
        return _chebyshev_ball(P)
    B = np.asarray(B_v.value)
    B = 0.5 * (B + B.T)
    w, V = np.linalg.eigh(B)
    if w[0] <= 1e-12:
        return _chebyshev_ball(P)
    B = (V * w) @ V.T
    d = np.asarray(d_v.value)
    margins = P.b - P.A @ d
    if np.any(margins <= 0):
        return _chebyshev_ball(P)
    for _ in range(3):
        norms = np.linalg.norm(P.A @ B, axis=1)
        viol = norms - margins
        if np.max(viol) <= 0:
            break
        scale = float(np.min(margins / np.maximum(norms, 1e-300)))
        B = B * (scale * (1 - 1e-12))
    else:
        return _chebyshev_ball(P)
    _, r = P.chebyshev()
    if np.linalg.det(B) < r**3 * (1 - 1e-9):
        return _chebyshev_ball(P)
    return Ellipsoid(B, d)


# ---------------------------------------------------------------------------
# the inflation loop


def _obstacle_cells(gmap: GridMap, box: AABB) -> list[ObstacleCell]:
    idx = gmap.occupied_indices_in_aabb(box)
    cells = []
    for ijk in idx:
        cell = gmap.cell_box(ijk)
        lo = np.maximum(cell.min, box.min)
        hi = np.minimum(cell.max, box.max)
        if np.all(hi - lo > 1e-12):
            cells.append(ObstacleCell(lo, hi))
    return cells


def inflate_region(seed, gmap: GridMap, cfg: InflationConfig,
                   trace: list | None = None) -> HPolyhedron:
    """Grow a convex obstacle-free polytope around seed (which stays inside)."""
    seed = np.asarray(seed, dtype=float).reshape(3)
    ijk = gmap.world_to_cell(seed)
    if ijk is None:
        raise GridError("seed lies outside the map")
    if gmap.is_occupied_cell(ijk):
        raise GridError("seed cell is occupied")
    box = AABB(seed - cfg.bbox_halfwidth, seed + cfg.bbox_halfwidth)
    box = box.intersection(gmap.bounds)
    base_A = np.vstack([np.eye(3), -np.eye(3)])
    base_b = np.concatenate([box.max, -box.min])
    cells = _obstacle_cells(gmap, box)
    ell = Ellipsoid(0.25 * gmap.resolution * np.eye(3), seed)
    best = None
    prev_det = None
    for _ in range(cfg.max_iterations):
        planes = separating_hyperplanes(ell, cells)
        if planes:
            A = np.vstack([base_A] + [p.normal[None, :] for p in planes])
            b = np.concatenate([base_b, [p.offset for p in planes]])
        else:
            A, b = base_A, base_b
        poly = HPolyhedron(A, b)
        poly.bounded = True
        poly = poly.canonicalize()
        if poly.is_empty or not poly.contains_point(seed, tol=_SEED_TOL):
            break
        best = poly
        try:
            ell = mvie(poly)
        except DegenerateGeometryError:
            break
        det = float(np.linalg.det(ell.shape))
        if trace is not None:
            trace.append(det * 4.0 / 3.0 * math.pi)
        if prev_det is not None and det < prev_det * (1 + cfg.volume_growth_tol):
            break
        prev_det = det
    if best is None:  # unreachable for free seeds: the ball center is always kept
        raise GeometryError("inflation produced no region containing the seed")
    return best
