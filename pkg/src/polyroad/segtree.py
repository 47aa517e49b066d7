"""Multi-level spatial index over axis-aligned boxes.

Segment trees on x and y with centered interval trees on z: stabbing a point
touches O(log^2 n) tree nodes plus O(log + k) per interval tree, box-overlap
queries traverse every node whose slot range intersects the query range.
Closed-interval semantics throughout: touching boxes count as overlapping.

The structure is immutable after construction; queries accept an optional
VisitCounter so tests can assert the polylog visit growth.
"""

from __future__ import annotations

import numpy as np

from .geometry import AABB


class VisitCounter:
    """Counts tree nodes touched by a query."""

    __slots__ = ("nodes",)

    def __init__(self):
        self.nodes = 0


class _ZTree:
    """Centered interval tree over closed z-intervals (lo, hi, id)."""

    __slots__ = ("center", "left", "right", "by_lo", "by_hi")

    def __init__(self, items):
        eps = sorted({v for it in items for v in (it[0], it[1])})
        self.center = eps[len(eps) // 2]
        here, left, right = [], [], []
        for it in items:
            if it[1] < self.center:
                left.append(it)
            elif it[0] > self.center:
                right.append(it)
            else:
                here.append(it)
        self.by_lo = sorted(here, key=lambda it: it[0])
        self.by_hi = sorted(here, key=lambda it: -it[1])
        self.left = _ZTree(left) if left else None
        self.right = _ZTree(right) if right else None

    def stab(self, q, out, counter):
        node = self
        while node is not None:
            counter.nodes += 1
            if q < node.center:
                for lo, hi, ident in node.by_lo:
                    if lo > q:
                        break
                    out.add(ident)
                node = node.left
            elif q > node.center:
                for lo, hi, ident in node.by_hi:
                    if hi < q:
                        break
                    out.add(ident)
                node = node.right
            else:
                for _, _, ident in node.by_lo:
                    out.add(ident)
                return

    def overlap(self, qlo, qhi, out, counter):
        counter.nodes += 1
        if qlo <= self.center <= qhi:
            for _, _, ident in self.by_lo:
                out.add(ident)
        elif qhi < self.center:
            for lo, hi, ident in self.by_lo:
                if lo > qhi:
                    break
                out.add(ident)
        else:
            for lo, hi, ident in self.by_hi:
                if hi < qlo:
                    break
                out.add(ident)
        if self.left is not None and qlo < self.center:
            self.left.overlap(qlo, qhi, out, counter)
        if self.right is not None and qhi > self.center:
            self.right.overlap(qlo, qhi, out, counter)


class _SegLevel:
    """One segment-tree level with canonical-cover storage.

    Slots alternate open gaps and endpoint atoms (2m+1 slots for m unique
    endpoints), which makes closed-interval stabbing and overlap exact.
    """

    __slots__ = ("eps", "size", "subs", "below")

    def __init__(self, items, get_range, make_sub):
        eps = sorted({v for it in items for v in get_range(it)})
        self.eps = np.array(eps, dtype=float)
        n_slots = 2 * len(eps) + 1
        self.size = 1 << (n_slots - 1).bit_length() if n_slots > 1 else 1
        buckets: dict[int, list] = {}
        for it in items:
            lo, hi = get_range(it)
            self._insert(1, 0, self.size - 1, self._slot(lo), self._slot(hi),
                         it, buckets)
        self.subs = {node: make_sub(sub_items) for node, sub_items in buckets.items()}
        below = set()
        for node in self.subs:
            while node and node not in below:
                below.add(node)
                node >>= 1
        self.below = below

    def _slot(self, v) -> int:
        j = int(np.searchsorted(self.eps, v, side="left"))
        if j < len(self.eps) and self.eps[j] == v:
            return 2 * j + 1
        return 2 * j

    def _insert(self, node, nlo, nhi, l, r, item, buckets):
        if r < nlo or nhi < l:
            return
        if l <= nlo and nhi <= r:
            buckets.setdefault(node, []).append(item)
            return
        mid = (nlo + nhi) // 2
        self._insert(2 * node, nlo, mid, l, r, item, buckets)
        self._insert(2 * node + 1, mid + 1, nhi, l, r, item, buckets)

    def stab(self, v, query_sub, counter):
        slot = self._slot(v)
        node, nlo, nhi = 1, 0, self.size - 1
        while True:
            counter.nodes += 1
            sub = self.subs.get(node)
            if sub is not None:
                query_sub(sub)
            if nlo == nhi:
                return
            mid = (nlo + nhi) // 2
            if slot <= mid:
                node, nhi = 2 * node, mid
            else:
                node, nlo = 2 * node + 1, mid + 1

    def range_query(self, lo, hi, query_sub, counter):
        self._range(1, 0, self.size - 1, self._slot(lo), self._slot(hi),
                    query_sub, counter)

    def _range(self, node, nlo, nhi, l, r, query_sub, counter):
        if r < nlo or nhi < l or node not in self.below:
            return
        counter.nodes += 1
        sub = self.subs.get(node)
        if sub is not None:
            query_sub(sub)
        if nlo == nhi:
            return
        mid = (nlo + nhi) // 2
        self._range(2 * node, nlo, mid, l, r, query_sub, counter)
        self._range(2 * node + 1, mid + 1, nhi, l, r, query_sub, counter)


class SegTree3D:
    """Static index mapping ids to AABBs with stab and box-overlap queries."""

    def __init__(self, boxes):
        entries = []
        seen = set()
        for ident, box in boxes:
            ident = int(ident)
            if ident in seen:
                raise ValueError(f"duplicate id {ident} in spatial index")
            seen.add(ident)
            entries.append((ident, np.asarray(box.min, float), np.asarray(box.max, float)))
        self.n = len(entries)
        if entries:
            self._x = _SegLevel(
                entries,
                lambda e: (e[1][0], e[2][0]),
                lambda xs: _SegLevel(
                    xs,
                    lambda e: (e[1][1], e[2][1]),
                    lambda ys: _ZTree([(e[1][2], e[2][2], e[0]) for e in ys]),
                ),
            )
        else:
            self._x = None

    def stab(self, p, counter: VisitCounter | None = None) -> set[int]:
        """Ids of all boxes containing point p (closed intervals)."""
        p = np.asarray(p, dtype=float)
        out: set[int] = set()
        if self._x is None:
            return out
        counter = counter if counter is not None else VisitCounter()
        self._x.stab(
            p[0],
            lambda ytree: ytree.stab(
                p[1], lambda ztree: ztree.stab(p[2], out, counter), counter
            ),
            counter,
        )
        return out

    def candidates_for_box(self, box: AABB, counter: VisitCounter | None = None) -> set[int]:
        """Ids of all boxes whose AABB intersects the query box."""
        out: set[int] = set()
        if self._x is None:
            return out
        counter = counter if counter is not None else VisitCounter()
        self._x.range_query(
            box.min[0], box.max[0],
            lambda ytree: ytree.range_query(
                box.min[1], box.max[1],
                lambda ztree: ztree.overlap(box.min[2], box.max[2], out, counter),
                counter,
            ),
            counter,
        )
        return out


def build_index(boxes) -> SegTree3D:
    return SegTree3D(boxes)


def stab(index: SegTree3D, p, counter: VisitCounter | None = None) -> set[int]:
    return index.stab(p, counter)


def candidates_for_box(index: SegTree3D, box: AABB,
                       counter: VisitCounter | None = None) -> set[int]:
    return index.candidates_for_box(box, counter)
