"""Convex 3D polytope primitives: halfspace sets, vertex enumeration, LP-backed tests.

Everything here is metric: halfspace normals are stored unit length so offsets
read as signed distances in meters.  Polytopes are immutable after construction
(arrays are marked read-only) and safe to share across threads; derived data
(vertices, Chebyshev ball, volume) is computed lazily and cached.

Emptiness convention: a polytope whose Chebyshev radius falls below
EMPTY_RADIUS is treated as empty everywhere.  The exact LP is the tie-break
authority; cheap vertex-derived bounds only short-circuit decisions they can
settle exactly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

UNIT_TOL = 1e-9        # max deviation of stored normals from unit length
VERTEX_TOL = 1e-7      # vertex feasibility / dedupe tolerance (meters)
EMPTY_RADIUS = 1e-4    # Chebyshev radius below which a polytope counts as empty
CONTAIN_TOL = 1e-9     # polyhedron-in-polyhedron support slack

_LP_OPTS = {"presolve": False}


class GeometryError(ValueError):
    """Invalid geometric input or operation."""


class DegenerateGeometryError(GeometryError):
    """The operation needs an interior; the polytope has none."""


class UnboundedError(GeometryError):
    """The operation needs a bounded polytope."""


# ---------------------------------------------------------------------------
# small value types


@dataclass(frozen=True)
class Hyperplane:
    """Halfspace ``normal . x <= offset`` with a unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float).reshape(3).copy()
        nrm = float(np.linalg.norm(n))
        if nrm < 1e-12:
            raise GeometryError("hyperplane normal must be nonzero")
        n /= nrm
        n.setflags(write=False)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset) / nrm)

    def signed_distance(self, x) -> float:
        return float(self.normal @ np.asarray(x, dtype=float)) - self.offset


@dataclass(frozen=True)
class AABB:
    """Closed axis-aligned box [min, max]."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).reshape(3).copy()
        hi = np.asarray(self.max, dtype=float).reshape(3).copy()
        if np.any(hi < lo):
            raise GeometryError("AABB max must dominate min")
        lo.setflags(write=False)
        hi.setflags(write=False)
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def intersects(self, other: "AABB", tol: float = 0.0) -> bool:
        return bool(
            np.all(self.min <= other.max + tol) and np.all(other.min <= self.max + tol)
        )

    def contains_point(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.min - tol) and np.all(x <= self.max + tol))

    def intersection(self, other: "AABB"):
        lo = np.maximum(self.min, other.min)
        hi = np.minimum(self.max, other.max)
        if np.any(hi < lo):
            return None
        return AABB(lo, hi)

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    @property
    def extent(self) -> np.ndarray:
        return self.max - self.min


@dataclass(frozen=True)
class OBB:
    """Oriented box: ``center + rotation @ u`` for ``|u_i| <= half_extents_i``."""

    center: np.ndarray
    rotation: np.ndarray
    half_extents: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(3).copy()
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3).copy()
        h = np.asarray(self.half_extents, dtype=float).reshape(3).copy()
        if np.max(np.abs(r.T @ r - np.eye(3))) > UNIT_TOL * 10:
            raise GeometryError("OBB rotation must be orthonormal")
        if np.any(h <= 0):
            raise GeometryError("OBB half extents must be positive")
        for a in (c, r, h):
            a.setflags(write=False)
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "half_extents", h)

    def inflate(self, r: float) -> "OBB":
        if r < 0:
            raise GeometryError("inflation radius must be nonnegative")
        return OBB(self.center, self.rotation, self.half_extents + r)

    @property
    def corners(self) -> np.ndarray:
        signs = np.array(list(itertools.product((-1.0, 1.0), repeat=3)))
        return self.center + (signs * self.half_extents) @ self.rotation.T

    @property
    def aabb(self) -> AABB:
        c = self.corners
        return AABB(c.min(axis=0), c.max(axis=0))

    def face_rows(self):
        """(A, b) for the 6 faces, ordered +x +y +z -x -y -z in box frame.

        Opposite faces sit at index k and k+3; decomposition relies on that
        pairing to skip provably disjoint sibling checks.
        """
        axes = self.rotation.T  # rows are the box axes in world frame
        A = np.vstack([axes, -axes])
        proj = axes @ self.center
        b = np.concatenate([proj + self.half_extents, -proj + self.half_extents])
        return A, b

    def to_polyhedron(self) -> "HPolyhedron":
        A, b = self.face_rows()
        order = _canonical_row_order(*_normalize_rows(A, b))
        poly = HPolyhedron(A[order], b[order], _trusted="canonical")
        poly._vertices = _lex_sorted(self.corners)
        poly._cheb = (self.center.copy(), float(self.half_extents.min()))
        poly._cheb_lb = float(self.half_extents.min())
        poly._cheb_ub = float(self.half_extents.min())
        poly._vol_centroid = (float(8.0 * np.prod(self.half_extents)), self.center.copy())
        return poly

    def contains_point(self, x, tol: float = 0.0) -> bool:
        u = self.rotation.T @ (np.asarray(x, dtype=float) - self.center)
        return bool(np.all(np.abs(u) <= self.half_extents + tol))


@dataclass(frozen=True)
class Ellipsoid:
    """Image of the unit ball: ``{shape @ u + center : |u| <= 1}``, shape SPD."""

    shape: np.ndarray
    center: np.ndarray

    def __post_init__(self):
        B = np.asarray(self.shape, dtype=float).reshape(3, 3).copy()
        c = np.asarray(self.center, dtype=float).reshape(3).copy()
        if np.max(np.abs(B - B.T)) > 1e-9:
            raise GeometryError("ellipsoid shape must be symmetric")
        if np.min(np.linalg.eigvalsh(B)) <= 0:
            raise GeometryError("ellipsoid shape must be positive definite")
        B.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "shape", B)
        object.__setattr__(self, "center", c)

    @property
    def volume(self) -> float:
        return float(4.0 / 3.0 * math.pi * np.linalg.det(self.shape))

    def support(self, direction) -> float:
        a = np.asarray(direction, dtype=float)
        return float(a @ self.center + np.linalg.norm(self.shape @ a))


# ---------------------------------------------------------------------------
# row-level helpers


def _normalize_rows(A, b):
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel().copy()
    if A.shape[1] != 3 or A.shape[0] != b.shape[0]:
        raise GeometryError("halfspace arrays must be (m,3) and (m,)")
    norms = np.linalg.norm(A, axis=1)
    if np.any(norms < 1e-12):
        raise GeometryError("halfspace normal must be nonzero")
    return A / norms[:, None], b / norms


def _dedupe_rows(A, b):
    """Collapse rows with (numerically) identical normals, keeping the tightest."""
    best: dict[bytes, int] = {}
    order = []
    for i in range(A.shape[0]):
        key = np.round(A[i], 9).tobytes()
        j = best.get(key)
        if j is None:
            best[key] = i
            order.append(i)
        elif b[i] < b[j]:
            best[key] = i
            order[order.index(j)] = i
    idx = np.array(order, dtype=int)
    return A[idx], b[idx]


def _lex_sorted(pts: np.ndarray) -> np.ndarray:
    if len(pts) == 0:
        return pts
    order = np.lexsort((pts[:, 2], pts[:, 1], pts[:, 0]))
    out = pts[order].copy()
    out.setflags(write=False)
    return out


def _canonical_row_order(A, b):
    key = np.round(np.column_stack([A, b]), 12)
    return np.lexsort((key[:, 3], key[:, 2], key[:, 1], key[:, 0]))


@lru_cache(maxsize=128)
def _triples(m: int) -> np.ndarray:
    return np.array(list(itertools.combinations(range(m), 3)), dtype=int)


def _dedupe_points(X: np.ndarray, tol: float) -> np.ndarray:
    """Lex-sort and drop near-duplicates in the inf norm (small n, O(n^2))."""
    if len(X) == 0:
        return np.empty((0, 3))
    order = np.lexsort((X[:, 2], X[:, 1], X[:, 0]))
    X = X[order]
    diff = np.max(np.abs(X[:, None, :] - X[None, :, :]), axis=2)
    keep = np.ones(len(X), dtype=bool)
    for i in range(len(X)):
        if keep[i]:
            later = np.arange(i + 1, len(X))
            keep[later[diff[i, later] <= tol]] = False
    return X[keep]


def _enumerate_vertices_raw(A, b, tol=VERTEX_TOL):
    """All feasible intersections of 3 independent planes, deduped within tol."""
    m = A.shape[0]
    if m < 3:
        return np.empty((0, 3))
    idx = _triples(m)
    M = A[idx]
    dets = np.abs(np.linalg.det(M))
    ok = dets > 1e-10
    if not np.any(ok):
        return np.empty((0, 3))
    X = np.linalg.solve(M[ok], b[idx][ok][..., None])[..., 0]
    feas = np.all(A @ X.T <= b[:, None] + tol, axis=0)
    return _dedupe_points(X[feas], tol)


def _cheb_lp(A, b):
    """Max-radius inscribed ball; radius is free so a negative value flags empty."""
    m = A.shape[0]
    res = linprog(
        np.array([0.0, 0.0, 0.0, -1.0]),
        A_ub=np.hstack([A, np.ones((m, 1))]),
        b_ub=b,
        bounds=[(None, None)] * 4,
        method="highs",
        options=_LP_OPTS,
    )
    if res.status == 3:
        raise UnboundedError("polyhedron is unbounded")
    if res.status != 0:
        raise GeometryError(f"chebyshev LP failed with status {res.status}")
    return res.x[:3].copy(), float(res.x[3])


def _positively_spans(A) -> bool:
    """True iff the unit normals positively span R^3, i.e. the set is bounded."""
    m = A.shape[0]
    if m < 4:
        return False
    # max t  s.t.  lambda @ A = 0, sum lambda = 1, lambda_i >= t
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_eq = np.zeros((4, m + 1))
    A_eq[:3, :m] = A.T
    A_eq[3, :m] = 1.0
    b_eq = np.array([0.0, 0.0, 0.0, 1.0])
    A_ub = np.hstack([-np.eye(m), np.ones((m, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(m),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(None, None)] * (m + 1),
        method="highs",
        options=_LP_OPTS,
    )
    return res.status == 0 and res.x is not None and res.x[-1] > 1e-9


def _lp_nonredundant(A, b):
    """Exact LP redundancy filter; slow path used when the dual hull fails."""
    m = A.shape[0]
    keep = []
    for i in range(m):
        bi = b.copy()
        bi[i] += 1.0
        res = linprog(-A[i], A_ub=A, b_ub=bi, bounds=[(None, None)] * 3,
                      method="highs", options=_LP_OPTS)
        if res.status != 0 or -res.fun > b[i] + 1e-9:
            keep.append(i)
    return np.array(keep, dtype=int)


def _dual_hull_keep(A, b, interior):
    """Indices of non-redundant rows via the polar dual convex hull."""
    denom = b - A @ interior
    if np.any(denom <= 0):
        raise GeometryError("interior point is not interior")
    if A.shape[0] <= 4:
        return np.arange(A.shape[0])
    pts = A / denom[:, None]
    try:
        hull = ConvexHull(pts)
        return np.sort(hull.vertices)
    except QhullError:
        return _lp_nonredundant(A, b)


def _clip_one_canonical(c: "HPolyhedron", a: np.ndarray, beta: float,
                        cull_radius: float):
    """Clip a canonical polytope by one halfspace using its cached vertices.

    Child vertices are the kept parent vertices plus the plane's crossings of
    parent edges (two vertices sharing two active faces are always the
    endpoints of an edge on a convex polytope), so the cubic brute-force
    enumeration is skipped.  Children certified thinner than ``cull_radius``
    are reported empty.  Returns None when the configuration is degenerate
    (plane cuts nothing, or is parallel to an existing face within rounding);
    the caller then falls back to the general path.
    """
    V = c.enumerate_vertices()
    marg = beta - V @ a
    if float(np.min(marg)) >= -VERTEX_TOL:
        return None  # nothing cut within tolerance: exact redundancy needed
    A_st = np.vstack([c.A, a[None, :]])
    b_st = np.append(c.b, beta)

    def empty_child():
        out = HPolyhedron(A_st, b_st)
        out.bounded = True
        out._mark_empty()
        return out

    mx = float(np.max(marg))
    if mx < 2.0 * max(EMPTY_RADIUS, cull_radius):
        # every point of the child lies within mx of the cutting plane, so its
        # inscribed radius is at most mx / 2: below the emptiness/cull bar
        return empty_child()
    if np.any(np.all(np.round(c.A, 9) == np.round(a, 9), axis=1)):
        return None  # parallel duplicate row: the general path merges offsets

    kept = marg >= -VERTEX_TOL
    in_idx = np.where(kept)[0]
    out_idx = np.where(~kept)[0]
    act = (np.abs(V @ c.A.T - c.b) <= VERTEX_TOL).astype(np.uint8)
    shared = act @ act.T
    ii, jj = np.where(shared[np.ix_(in_idx, out_idx)] >= 2)
    if len(ii) == 0:
        return None  # no crossing edges found: incidence tolerance misfired
    vi, vj = V[in_idx[ii]], V[out_idx[jj]]
    mi, mj = marg[in_idx[ii]], marg[out_idx[jj]]
    t = (mi / (mi - mj))[:, None]
    cand = np.vstack([V[kept], vi + t * (vj - vi)])
    feas = np.all(A_st @ cand.T <= b_st[:, None] + VERTEX_TOL, axis=0)
    Vc = _dedupe_points(cand[feas], VERTEX_TOL)
    if len(Vc) < 4:
        return empty_child()
    ub = float(np.min(b_st - np.min(A_st @ Vc.T, axis=1)) / 2.0)
    if ub < max(EMPTY_RADIUS, cull_radius):
        return empty_child()
    p = Vc.mean(axis=0)
    lb = float(np.min(b_st - A_st @ p))
    cheb = None
    if lb < 1e-9:
        center, radius = _cheb_lp(A_st, b_st)
        if radius < max(EMPTY_RADIUS, cull_radius):
            return empty_child()
        p, lb, cheb = center, radius, (center, radius)
    # a row is irredundant iff it supports a 2d face, i.e. at least three
    # vertices lie on it (three collinear extreme points cannot exist)
    inc = np.abs(A_st @ Vc.T - b_st[:, None]) <= VERTEX_TOL
    keep = np.where(np.count_nonzero(inc, axis=1) >= 3)[0]
    A_k, b_k = A_st[keep], b_st[keep]
    order = _canonical_row_order(A_k, b_k)
    out = HPolyhedron(A_k[order], b_k[order], _trusted="canonical")
    out._vertices = _lex_sorted(Vc)
    out._cheb_lb = lb
    out._cheb_ub = ub
    out._cheb = cheb
    return out


# ---------------------------------------------------------------------------
# the polytope class


class HPolyhedron:
    """Intersection of unit-normal halfspaces ``A x <= b``.

    States: raw (as constructed), canonical (no redundant rows, rows in a
    deterministic sort order, caches populated), or empty.  Most operations
    canonicalize on demand; ``contains_point`` always tests the stored rows
    literally.
    """

    __slots__ = (
        "A", "b", "bounded", "canonical", "serial", "_empty", "_canon_ref",
        "_cheb", "_cheb_lb", "_cheb_ub", "_vertices", "_vol_centroid", "_aabb",
    )

    _serials = itertools.count()

    def __init__(self, A, b, *, _trusted: str | None = None):
        A, b = _normalize_rows(A, b)
        self.serial = next(HPolyhedron._serials)
        self.A = A
        self.b = b
        self.A.setflags(write=False)
        self.b.setflags(write=False)
        self.bounded: bool | None = None
        self.canonical = False
        self._empty: bool | None = None
        self._canon_ref = None
        self._cheb = None
        self._cheb_lb = -math.inf
        self._cheb_ub = math.inf
        self._vertices = None
        self._vol_centroid = None
        self._aabb = None
        if _trusted == "canonical":
            self.bounded = True
            self.canonical = True
            self._empty = False
            self._canon_ref = self
        elif _trusted == "empty":
            self._empty = True
            self.canonical = True
            self._canon_ref = self

    # -- construction -------------------------------------------------------

    @classmethod
    def from_halfspaces(cls, planes) -> "HPolyhedron":
        A = np.array([p.normal for p in planes], dtype=float)
        b = np.array([p.offset for p in planes], dtype=float)
        return cls(A, b)

    @classmethod
    def from_aabb(cls, box: AABB) -> "HPolyhedron":
        if np.any(box.max - box.min < 1e-12):
            raise DegenerateGeometryError("AABB has no interior")
        A = np.vstack([np.eye(3), -np.eye(3)])
        b = np.concatenate([box.max, -box.min])
        order = _canonical_row_order(A, b)
        poly = cls(A[order], b[order], _trusted="canonical")
        corners = np.array(list(itertools.product(*zip(box.min, box.max))))
        poly._vertices = _lex_sorted(corners)
        half = 0.5 * box.extent
        poly._cheb = (box.center, float(half.min()))
        poly._cheb_lb = float(half.min())
        poly._cheb_ub = float(half.min())
        poly._vol_centroid = (float(np.prod(box.extent)), box.center)
        poly._aabb = box
        return poly

    # -- basic predicates ----------------------------------------------------

    @property
    def halfspaces(self) -> list[Hyperplane]:
        return [Hyperplane(a, o) for a, o in zip(self.A, self.b)]

    def contains_point(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.A @ x <= self.b + tol))

    def contains_points(self, X, tol: float = 0.0) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.all(X @ self.A.T <= self.b + tol, axis=1)

    @property
    def is_empty(self) -> bool:
        if self._empty is None:
            self._reduce()
        return self._empty

    # -- canonical form ------------------------------------------------------

    def canonicalize(self) -> "HPolyhedron":
        if self._canon_ref is None:
            self._reduce()
        return self._canon_ref

    def _reduce(self):
        """Resolve emptiness/boundedness and build the canonical twin."""
        A, b = _dedupe_rows(self.A, self.b)
        if self.bounded is None:
            self.bounded = _positively_spans(A)
        if not self.bounded:
            raise UnboundedError("polyhedron is unbounded")
        V = _enumerate_vertices_raw(A, b)
        if len(V) < 4:
            self._mark_empty()
            return
        ub = float(np.min(b - np.min(A @ V.T, axis=1)) / 2.0)
        if ub < EMPTY_RADIUS:
            self._mark_empty()
            return
        p = V.mean(axis=0)
        lb = float(np.min(b - A @ p))
        cheb = None
        if lb < 1e-9:
            center, radius = _cheb_lp(A, b)
            if radius < EMPTY_RADIUS:
                self._mark_empty()
                return
            p, lb, cheb = center, radius, (center, radius)
        keep = _dual_hull_keep(A, b, p)
        A, b = A[keep], b[keep]
        order = _canonical_row_order(A, b)
        A, b = A[order], b[order]
        out = HPolyhedron(A, b, _trusted="canonical")
        out._vertices = _lex_sorted(V)
        out._cheb_lb = lb
        out._cheb_ub = ub
        out._cheb = cheb
        self._empty = False
        self._canon_ref = out
        if self.canonical:
            # already canonical by construction; adopt the caches in place
            self._canon_ref = self
            self._vertices = out._vertices
            self._cheb_lb = max(self._cheb_lb, lb) if self._cheb_lb != -math.inf else lb
            self._cheb_ub = min(self._cheb_ub, ub)
            self._cheb = self._cheb or cheb

    def _mark_empty(self):
        self._empty = True
        self.canonical = True
        self._canon_ref = self
        self._cheb_lb = -math.inf
        self._cheb_ub = 0.0

    # -- chebyshev ball ------------------------------------------------------

    def chebyshev(self):
        """Exact Chebyshev center and radius via LP; radius <= 0 flags empty."""
        if self._cheb is None:
            center, radius = _cheb_lp(self.A, self.b)
            self._cheb = (center, radius)
            if radius >= 0:
                self._cheb_lb = radius
                self._cheb_ub = radius
        return self._cheb

    def radius_at_least(self, t: float) -> bool:
        """Exact decision ``chebyshev_radius >= t`` using bounds when they settle it."""
        if self._empty is None and self._cheb is None:
            self._reduce()
        if self._empty:
            return False
        c = self.canonicalize()
        if c._cheb_lb >= t:
            return True
        if c._cheb_ub < t:
            return False
        return c.chebyshev()[1] >= t

    # -- vertex-derived data ---------------------------------------------------

    def enumerate_vertices(self) -> np.ndarray:
        """Extreme points; raises if the polytope has no usable interior."""
        c = self.canonicalize()
        if c._empty:
            raise DegenerateGeometryError("polyhedron has no interior")
        if c._vertices is None:
            c._vertices = _lex_sorted(_enumerate_vertices_raw(c.A, c.b))
        return c._vertices

    def volume_centroid(self):
        """Exact volume and centroid via a tetrahedral fan over the hull facets."""
        c = self.canonicalize()
        if c._empty:
            raise DegenerateGeometryError("polyhedron has no interior")
        if c._vol_centroid is None:
            c._vol_centroid = hull_volume_centroid(c.enumerate_vertices())
        return c._vol_centroid

    @property
    def volume(self) -> float:
        return self.volume_centroid()[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.volume_centroid()[1]

    @property
    def aabb(self) -> AABB:
        c = self.canonicalize()
        if c._empty:
            raise DegenerateGeometryError("empty polyhedron has no AABB")
        if c._aabb is None:
            V = c.enumerate_vertices()
            c._aabb = AABB(V.min(axis=0), V.max(axis=0))
        return c._aabb

    def min_support(self, direction) -> float:
        """min over the polytope of direction . x (vertex minimum; exact for bounded)."""
        V = self.enumerate_vertices()
        return float(np.min(V @ np.asarray(direction, dtype=float)))

    # -- composite operations ---------------------------------------------------

    def intersect(self, other: "HPolyhedron") -> "HPolyhedron":
        A = np.vstack([self.A, other.A])
        b = np.concatenate([self.b, other.b])
        if self._empty or other._empty:
            out = HPolyhedron(A, b, _trusted="empty")
            return out
        out = HPolyhedron(A, b)
        if self.bounded or other.bounded:
            out.bounded = True
        return out.canonicalize()

    def clip(self, A_extra, b_extra, *, cull_radius: float = 0.0) -> "HPolyhedron":
        """Intersection with extra halfspaces; requires self bounded.

        ``cull_radius`` lets callers that discard thin results anyway skip the
        exact thin-versus-empty resolution: a result whose inscribed radius is
        certified below it may be reported as empty.
        """
        A_extra, b_extra = _normalize_rows(A_extra, b_extra)
        if A_extra.shape[0] == 1 and self._empty is not True:
            c = self.canonicalize()
            if not c._empty:
                fast = _clip_one_canonical(c, A_extra[0], float(b_extra[0]),
                                           cull_radius)
                if fast is not None:
                    return fast
        A = np.vstack([self.A, A_extra])
        b = np.concatenate([self.b, b_extra])
        out = HPolyhedron(A, b)
        out.bounded = True
        try:
            return out.canonicalize()
        except UnboundedError:  # pragma: no cover - guarded by bounded flag
            raise

    def contains_polyhedron(self, inner: "HPolyhedron", tol: float = CONTAIN_TOL) -> bool:
        """True iff max over inner of a.x <= b + tol for every halfspace of self."""
        if inner._empty:
            return True
        for a, off in zip(self.A, self.b):
            res = linprog(-a, A_ub=inner.A, b_ub=inner.b,
                          bounds=[(None, None)] * 3, method="highs", options=_LP_OPTS)
            if res.status == 3:
                raise UnboundedError("inner polyhedron is unbounded")
            if res.status != 0:
                return True  # infeasible inner: empty set is contained
            if -res.fun > off + tol:
                return False
        return True

    def same_geometry(self, other: "HPolyhedron", tol: float = 1e-9) -> bool:
        a = self.canonicalize()
        o = other.canonicalize()
        if a.is_empty or o.is_empty:
            return a.is_empty == o.is_empty
        if a.A.shape != o.A.shape:
            return False
        return bool(
            np.max(np.abs(a.A - o.A)) <= tol and np.max(np.abs(a.b - o.b)) <= tol
        )

    def row_signature(self, decimals: int = 9) -> bytes:
        c = self.canonicalize()
        return np.round(np.column_stack([c.A, c.b]), decimals).tobytes()

    def __repr__(self):
        state = "empty" if self._empty else ("canonical" if self.canonical else "raw")
        return f"HPolyhedron({self.A.shape[0]} halfspaces, {state})"


def hull_volume_centroid(V: np.ndarray) -> tuple[float, np.ndarray]:
    """Volume and centroid of conv(V) via a tetrahedral fan over hull facets."""
    try:
        hull = ConvexHull(V)
    except QhullError as e:
        raise DegenerateGeometryError("degenerate vertex set") from e
    ref = V.mean(axis=0)
    tris = V[hull.simplices]
    d = tris - ref
    vols = np.abs(np.linalg.det(d)) / 6.0
    vol = float(vols.sum())
    cents = (tris.sum(axis=1) + ref) / 4.0
    centroid = (cents * vols[:, None]).sum(axis=0) / vol
    return vol, centroid


def intersection_probe(P: HPolyhedron, Q: HPolyhedron):
    """Raw extreme points and deduped halfspace rows of P intersect Q.

    Skips redundancy removal and canonical-twin construction, so callers that
    only need metric facts about the intersection (inscribed radius bounds,
    centroid) avoid most of `intersect`'s cost.  Returns ``(V, A, b)``; fewer
    than 4 vertices means the intersection has no usable interior.
    """
    A = np.vstack([P.A, Q.A])
    b = np.concatenate([P.b, Q.b])
    A, b = _dedupe_rows(A, b)
    return _enumerate_vertices_raw(A, b), A, b


# ---------------------------------------------------------------------------
# module-level operation aliases (thin wrappers; the methods are primary)


def contains_point(P: HPolyhedron, x, tol: float = 0.0) -> bool:
    return P.contains_point(x, tol)


def chebyshev(P: HPolyhedron):
    return P.chebyshev()


def canonicalize(P: HPolyhedron) -> HPolyhedron:
    return P.canonicalize()


def intersect(P: HPolyhedron, Q: HPolyhedron) -> HPolyhedron:
    return P.intersect(Q)


def contains_polyhedron(outer: HPolyhedron, inner: HPolyhedron,
                        tol: float = CONTAIN_TOL) -> bool:
    return outer.contains_polyhedron(inner, tol)


def enumerate_vertices(P: HPolyhedron) -> np.ndarray:
    return P.enumerate_vertices()


def volume_centroid(P: HPolyhedron):
    return P.volume_centroid()


def obb_halfspaces(obb: OBB) -> HPolyhedron:
    return obb.to_polyhedron()


def inflate_obb(obb: OBB, r: float) -> OBB:
    return obb.inflate(r)
