"""Polygons and 2D constrained triangulations.

A Polygon2 is one outer ring plus optional hole rings.  Building a
ConstrainedComplex2 triangulates the polygon vertices together with a
generous padding rectangle, inserts every polygon edge as a constrained
edge, and classifies each triangle as material or complement.  The
padding keeps the complement connected around the shape, so complement
analyses can travel around prongs and pockets the way they do in the
plane; it is sized beyond the largest possible contact distance, which
makes running out of cells equivalent to an unbounded value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import Delaunay

from .geom import (
    orient2d,
    point_on_segment_2d,
    polygon_area_sign,
    segments_intersect,
)
from .values import CellClass

__all__ = ["PolygonError", "Polygon2", "ConstrainedComplex2"]

# Padding margin as a multiple of the polygon bounding box diagonal.
# Any antipodean contact lies within one diagonal of its anchor, so the
# collar only needs to exceed that; 1.25 leaves comfortable slack.
PAD_FACTOR = 1.25


class PolygonError(ValueError):
    """Invalid polygon input (non-simple, bad nesting, degenerate)."""


@dataclass
class Polygon2:
    """Simple polygon with holes: rings[0] is the outer ring
    (counterclockwise after normalisation), the rest are holes
    (clockwise), so material always lies to the left of every directed
    edge."""

    rings: list[np.ndarray]

    @classmethod
    def from_rings(cls, rings: list) -> "Polygon2":
        rings = [np.asarray(r, dtype=float) for r in rings]
        poly = cls(rings)
        poly._normalize()
        poly.validate()
        return poly

    def _normalize(self) -> None:
        for i, ring in enumerate(self.rings):
            if len(ring) < 3:
                raise PolygonError(f"ring {i} has fewer than 3 vertices")
            sign = polygon_area_sign(ring)
            if sign == 0:
                raise PolygonError(f"ring {i} has zero area")
            want = 1 if i == 0 else -1
            if sign != want:
                self.rings[i] = ring[::-1].copy()

    def validate(self) -> None:
        for ri, ring in enumerate(self.rings):
            n = len(ring)
            for i in range(n):
                if tuple(ring[i]) == tuple(ring[(i + 1) % n]):
                    raise PolygonError(f"ring {ri} repeats vertex {i}")
            for i in range(n):
                a, b = ring[i], ring[(i + 1) % n]
                for j in range(i + 1, n):
                    c, d = ring[j], ring[(j + 1) % n]
                    if j == i + 1:
                        # Consecutive edges share b == c; reject collinear folds.
                        if point_on_segment_2d(d, a, b) or point_on_segment_2d(a, c, d):
                            raise PolygonError(
                                f"ring {ri}: edges {i} and {j} overlap along a line"
                            )
                        continue
                    if i == 0 and j == n - 1:
                        # Consecutive around the wrap; shared vertex is a == d.
                        if point_on_segment_2d(c, a, b) or point_on_segment_2d(b, c, d):
                            raise PolygonError(
                                f"ring {ri}: edges {i} and {j} overlap along a line"
                            )
                        continue
                    if segments_intersect(a, b, c, d):
                        raise PolygonError(f"ring {ri}: edges {i} and {j} intersect")
        # Rings must be pairwise disjoint.
        for ri in range(len(self.rings)):
            for rj in range(ri + 1, len(self.rings)):
                for i in range(len(self.rings[ri])):
                    a = self.rings[ri][i]
                    b = self.rings[ri][(i + 1) % len(self.rings[ri])]
                    for j in range(len(self.rings[rj])):
                        c = self.rings[rj][j]
                        d = self.rings[rj][(j + 1) % len(self.rings[rj])]
                        if segments_intersect(a, b, c, d):
                            raise PolygonError(
                                f"rings {ri} and {rj} intersect (edges {i}, {j})"
                            )
        # Holes inside the outer ring, not inside each other.
        for ri in range(1, len(self.rings)):
            if not self.contains_point(self.rings[ri][0], only_ring=0):
                raise PolygonError(f"hole ring {ri} is not inside the outer ring")
            for rj in range(1, len(self.rings)):
                if ri != rj and self._ring_contains(rj, self.rings[ri][0]):
                    raise PolygonError(f"hole ring {ri} lies inside hole ring {rj}")

    def _ring_contains(self, ring_index: int, p) -> bool:
        return _even_odd([self.rings[ring_index]], p)

    def contains_point(self, p, only_ring: int | None = None) -> bool:
        """Even-odd material test (points on the boundary are undefined)."""
        rings = self.rings if only_ring is None else [self.rings[only_ring]]
        return _even_odd(rings, p)

    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.vstack(self.rings)
        return pts.min(axis=0), pts.max(axis=0)

    def bbox_diagonal(self) -> float:
        lo, hi = self.bbox()
        return float(np.linalg.norm(hi - lo))

    def edges(self):
        """Yield (ring_index, vertex_index, a, b) for every directed edge."""
        for ri, ring in enumerate(self.rings):
            n = len(ring)
            for i in range(n):
                yield ri, i, ring[i], ring[(i + 1) % n]

    def vertex_count(self) -> int:
        return sum(len(r) for r in self.rings)


def _even_odd(rings, p) -> bool:
    px, py = float(p[0]), float(p[1])
    inside = False
    for ring in rings:
        n = len(ring)
        for i in range(n):
            ax, ay = ring[i]
            bx, by = ring[(i + 1) % n]
            if (ay > py) != (by > py):
                xint = ax + (py - ay) * (bx - ax) / (by - ay)
                if px < xint:
                    inside = not inside
    return inside


def point_in_ring(p, ring) -> bool:
    """Even-odd test against a single closed vertex loop."""
    return _even_odd([np.asarray(ring, dtype=float)], p)


def _ekey(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass
class ConstrainedComplex2:
    """Triangulated plane region with constrained (boundary) edges.

    Triangles are stored counterclockwise.  Constrained edges keep the
    ring orientation (material to the left) and survive splits through
    the children table.
    """

    points: list[np.ndarray] = field(default_factory=list)
    tri_verts: dict[int, tuple[int, int, int]] = field(default_factory=dict)
    tri_class: dict[int, CellClass] = field(default_factory=dict)
    con_edges: dict[int, tuple[int, int]] = field(default_factory=dict)
    con_ring: dict[int, int] = field(default_factory=dict)
    con_children: dict[int, tuple[int, int]] = field(default_factory=dict)
    con_root: dict[int, int] = field(default_factory=dict)
    model_bbox: tuple[np.ndarray, np.ndarray] | None = None

    _next_tri: int = 0
    _next_con: int = 0
    _edge_tris: dict[tuple[int, int], list[int]] = field(default_factory=dict)
    _vertex_tris: dict[int, set[int]] = field(default_factory=dict)
    _con_by_pair: dict[tuple[int, int], int] = field(default_factory=dict)
    _con_at_vertex: dict[int, set[int]] = field(default_factory=dict)

    # ------------------------------------------------------------------
    # construction

    @classmethod
    def from_polygon(cls, polygon: Polygon2) -> "ConstrainedComplex2":
        cplx = cls()
        lo, hi = polygon.bbox()
        diag = float(np.linalg.norm(hi - lo))
        if diag == 0.0:
            raise PolygonError("degenerate polygon bounding box")
        margin = PAD_FACTOR * diag
        pad_lo = lo - margin
        pad_hi = hi + margin

        ring_vertex_ids: list[list[int]] = []
        for ring in polygon.rings:
            ids = [cplx._add_point(p) for p in ring]
            ring_vertex_ids.append(ids)
        pad_ids = [
            cplx._add_point(np.array(c))
            for c in (
                (pad_lo[0], pad_lo[1]),
                (pad_hi[0], pad_lo[1]),
                (pad_hi[0], pad_hi[1]),
                (pad_lo[0], pad_hi[1]),
            )
        ]

        pts = np.asarray(cplx.points)
        tri = Delaunay(pts)
        for simplex in tri.simplices:
            a, b, c = (int(v) for v in simplex)
            if orient2d(pts[a], pts[b], pts[c]) < 0:
                b, c = c, b
            cplx._add_tri((a, b, c))

        for ri, ids in enumerate(ring_vertex_ids):
            n = len(ids)
            for i in range(n):
                u, v = ids[i], ids[(i + 1) % n]
                cplx._insert_constraint(u, v)
                cplx._register_constrained(u, v, ring=ri)

        cplx._classify(seed_vertex=pad_ids[0])
        cplx.model_bbox = (lo.copy(), hi.copy())
        return cplx

    def _add_point(self, p) -> int:
        self.points.append(np.asarray(p, dtype=float).copy())
        vid = len(self.points) - 1
        self._vertex_tris.setdefault(vid, set())
        return vid

    def _add_tri(self, verts: tuple[int, int, int]) -> int:
        a, b, c = verts
        if orient2d(self.points[a], self.points[b], self.points[c]) < 0:
            verts = (a, c, b)
        tid = self._next_tri
        self._next_tri += 1
        self.tri_verts[tid] = verts
        for i in range(3):
            u, v = verts[i], verts[(i + 1) % 3]
            self._edge_tris.setdefault(_ekey(u, v), []).append(tid)
            self._vertex_tris.setdefault(verts[i], set()).add(tid)
        return tid

    def _remove_tri(self, tid: int) -> None:
        verts = self.tri_verts.pop(tid)
        self.tri_class.pop(tid, None)
        for i in range(3):
            u, v = verts[i], verts[(i + 1) % 3]
            lst = self._edge_tris[_ekey(u, v)]
            lst.remove(tid)
            if not lst:
                del self._edge_tris[_ekey(u, v)]
            self._vertex_tris[verts[i]].discard(tid)

    def _register_constrained(self, u: int, v: int, ring: int, root: int | None = None) -> int:
        eid = self._next_con
        self._next_con += 1
        self.con_edges[eid] = (u, v)
        self.con_ring[eid] = ring
        self.con_root[eid] = eid if root is None else root
        self._con_by_pair[_ekey(u, v)] = eid
        self._con_at_vertex.setdefault(u, set()).add(eid)
        self._con_at_vertex.setdefault(v, set()).add(eid)
        return eid

    # ------------------------------------------------------------------
    # constrained-edge insertion (cavity retriangulation)

    def _insert_constraint(self, u: int, v: int) -> None:
        if _ekey(u, v) in self._edge_tris:
            return
        pts = self.points
        pu, pv = pts[u], pts[v]

        # Find the triangle at u whose far edge blocks the segment.
        start = None
        for tid in self._vertex_tris[u]:
            a, b, c = self.tri_verts[tid]
            others = [w for w in (a, b, c) if w != u]
            w1, w2 = others
            # Order w1 left of u->v, w2 right.
            s1 = orient2d(pu, pv, pts[w1])
            s2 = orient2d(pu, pv, pts[w2])
            if s1 == 0 or s2 == 0:
                continue
            if s1 < 0 and s2 > 0:
                w1, w2 = w2, w1
                s1, s2 = s2, s1
            if s1 > 0 and s2 < 0:
                # The far edge (w1, w2) must actually face v.
                if orient2d(pts[w1], pts[w2], pu) != orient2d(pts[w1], pts[w2], pv):
                    start = (tid, w1, w2)
                    break
        if start is None:
            raise PolygonError(
                f"cannot insert constrained edge between vertices {u} and {v}"
            )

        tid, left, right = start
        crossed = [tid]
        upper = [left]
        lower = [right]
        cross_edge = (left, right)
        while True:
            nxt = self._other_tri(cross_edge[0], cross_edge[1], crossed[-1])
            if nxt is None:
                raise PolygonError(
                    f"constraint walk left the triangulation between {u} and {v}"
                )
            crossed.append(nxt)
            a, b, c = self.tri_verts[nxt]
            far = next(w for w in (a, b, c) if w not in cross_edge)
            if far == v:
                break
            s = orient2d(pu, pv, pts[far])
            if s > 0:
                upper.append(far)
                cross_edge = (far, cross_edge[1])
            elif s < 0:
                lower.append(far)
                cross_edge = (cross_edge[0], far)
            else:
                raise PolygonError(
                    f"vertex {far} lies exactly on constrained edge ({u}, {v})"
                )

        for tid in crossed:
            self._remove_tri(tid)
        # Walking the chain from v back to u keeps the left cavity
        # counterclockwise; the right cavity is already so from u to v.
        self._fill_cavity([v] + list(reversed(upper)) + [u])
        self._fill_cavity([u] + lower + [v])

    def _other_tri(self, a: int, b: int, not_tid: int) -> int | None:
        tids = self._edge_tris.get(_ekey(a, b), [])
        for t in tids:
            if t != not_tid:
                return t
        return None

    def _fill_cavity(self, loop: list[int]) -> None:
        """Ear-clip a simple counterclockwise cavity polygon."""
        pts = self.points
        loop = list(loop)
        while len(loop) > 3:
            n = len(loop)
            clipped = False
            for i in range(n):
                a, b, c = loop[(i - 1) % n], loop[i], loop[(i + 1) % n]
                if orient2d(pts[a], pts[b], pts[c]) <= 0:
                    continue
                ear_ok = True
                for w in loop:
                    if w in (a, b, c):
                        continue
                    if (
                        orient2d(pts[a], pts[b], pts[w]) >= 0
                        and orient2d(pts[b], pts[c], pts[w]) >= 0
                        and orient2d(pts[c], pts[a], pts[w]) >= 0
                    ):
                        ear_ok = False
                        break
                if ear_ok:
                    self._add_tri((a, b, c))
                    loop.pop(i)
                    clipped = True
                    break
            if not clipped:
                raise PolygonError("cavity retriangulation failed (degenerate input)")
        self._add_tri(tuple(loop))

    # ------------------------------------------------------------------
    # classification

    def _classify(self, seed_vertex: int) -> None:
        """Spread material/complement labels from a padding corner.

        The label flips exactly when crossing a constrained edge; since
        constrained edges form closed rings this is globally consistent
        and needs no geometric predicates.
        """
        seed = next(iter(self._vertex_tris[seed_vertex]))
        self.tri_class = {seed: CellClass.EXTERIOR}
        stack = [seed]
        while stack:
            tid = stack.pop()
            cls = self.tri_class[tid]
            a, b, c = self.tri_verts[tid]
            for u, v in ((a, b), (b, c), (c, a)):
                other = self._other_tri(u, v, tid)
                if other is None or other in self.tri_class:
                    continue
                flip = _ekey(u, v) in self._con_by_pair
                self.tri_class[other] = (
                    (CellClass.INTERIOR if cls == CellClass.EXTERIOR else CellClass.EXTERIOR)
                    if flip
                    else cls
                )
                stack.append(other)
        missing = set(self.tri_verts) - set(self.tri_class)
        if missing:
            raise PolygonError(f"classification did not reach {len(missing)} triangles")

    # ------------------------------------------------------------------
    # queries

    def vertex_point(self, vid: int) -> np.ndarray:
        return self.points[vid]

    def edge_points(self, eid: int) -> np.ndarray:
        u, v = self.con_edges[eid]
        return np.stack([self.points[u], self.points[v]])

    def cells_at_vertex(self, vid: int) -> set[int]:
        return self._vertex_tris.get(vid, set())

    def cells_of_pair(self, u: int, v: int) -> list[int]:
        return self._edge_tris.get(_ekey(u, v), [])

    def constrained_id(self, u: int, v: int) -> int | None:
        return self._con_by_pair.get(_ekey(u, v))

    def constrained_at_vertex(self, vid: int) -> set[int]:
        return self._con_at_vertex.get(vid, set())

    def is_boundary_vertex(self, vid: int) -> bool:
        return bool(self._con_at_vertex.get(vid))

    def boundary_vertices(self) -> list[int]:
        return sorted(v for v, es in self._con_at_vertex.items() if es)

    def live_constrained(self) -> list[int]:
        return sorted(self.con_edges.keys())

    def tri_points(self, tid: int) -> np.ndarray:
        a, b, c = self.tri_verts[tid]
        return np.stack([self.points[a], self.points[b], self.points[c]])

    def bbox_diagonal(self) -> float:
        lo, hi = self.model_bbox
        return float(np.linalg.norm(hi - lo))

    def ring_neighbors(self, vid: int) -> tuple[tuple[int, int], tuple[int, int]]:
        """((previous vertex, incoming eid), (next vertex, outgoing eid)).

        Material lies to the left when walking previous -> vid -> next.
        """
        incoming = [e for e in self.constrained_at_vertex(vid) if self.con_edges[e][1] == vid]
        outgoing = [e for e in self.constrained_at_vertex(vid) if self.con_edges[e][0] == vid]
        if len(incoming) != 1 or len(outgoing) != 1:
            raise ValueError(f"vertex {vid} is not on a manifold boundary curve")
        ein, eout = incoming[0], outgoing[0]
        return (self.con_edges[ein][0], ein), (self.con_edges[eout][1], eout)

    def sectors_at_vertex(self, vid: int, cls: CellClass) -> list[set[int]]:
        """Group the class-matching cells at vid into fans not separated
        by constrained edges incident at vid."""
        cells = [t for t in self.cells_at_vertex(vid) if self.tri_class[t] == cls]
        remaining = set(cells)
        sectors: list[set[int]] = []
        while remaining:
            seed = remaining.pop()
            sector = {seed}
            stack = [seed]
            while stack:
                tid = stack.pop()
                a, b, c = self.tri_verts[tid]
                for u, v in ((a, b), (b, c), (c, a)):
                    if vid not in (u, v):
                        continue
                    if _ekey(u, v) in self._con_by_pair:
                        continue
                    other = self._other_tri(u, v, tid)
                    if other in remaining:
                        remaining.discard(other)
                        sector.add(other)
                        stack.append(other)
            sectors.append(sector)
        return sectors

    def flank_cell(self, eid: int, cls: CellClass) -> int:
        """The cell of the given class flanking a constrained edge."""
        u, v = self.con_edges[eid]
        for tid in self.cells_of_pair(u, v):
            if self.tri_class[tid] == cls:
                return tid
        raise ValueError(f"constrained edge {eid} has no {cls.value} flank")

    def side_cell(self, eid: int, sign: int) -> int | None:
        """Cell flanking constrained edge eid on the left (sign=+1) or
        right (sign=-1) of its stored orientation."""
        u, v = self.con_edges[eid]
        pu, pv = self.points[u], self.points[v]
        for tid in self.cells_of_pair(u, v):
            w = next(w for w in self.tri_verts[tid] if w not in (u, v))
            if orient2d(pu, pv, self.points[w]) == sign:
                return tid
        return None

    def live_descendants(self, eid: int) -> list[int]:
        """Live constrained edges descending from eid (eid itself if live)."""
        if eid in self.con_edges:
            return [eid]
        out: list[int] = []
        for child in self.con_children.get(eid, ()):  # pragma: no branch
            out.extend(self.live_descendants(child))
        return out

    # ------------------------------------------------------------------
    # mutation

    def split_constrained_edge(self, eid: int, t: float) -> tuple[int, tuple[int, int]]:
        """Split a constrained edge at parameter t of its orientation.

        Returns (new vertex id, (first child eid, second child eid)).
        The flanking triangles are split alongside so the triangulation
        stays conforming.
        """
        if not 0.0 < t < 1.0:
            raise ValueError(f"split parameter must be interior, got {t}")
        u, v = self.con_edges[eid]
        pu, pv = self.points[u], self.points[v]
        mid = self._add_point(pu + t * (pv - pu))

        flanks = list(self.cells_of_pair(u, v))
        for tid in flanks:
            verts = self.tri_verts[tid]
            cls = self.tri_class[tid]
            # Preserve orientation: replace v by mid in one copy, u in the other.
            t1 = tuple(mid if x == v else x for x in verts)
            t2 = tuple(mid if x == u else x for x in verts)
            self._remove_tri(tid)
            new1 = self._add_tri(t1)
            new2 = self._add_tri(t2)
            self.tri_class[new1] = cls
            self.tri_class[new2] = cls

        ring = self.con_ring[eid]
        root = self.con_root[eid]
        del self.con_edges[eid]
        del self._con_by_pair[_ekey(u, v)]
        self._con_at_vertex[u].discard(eid)
        self._con_at_vertex[v].discard(eid)
        c1 = self._register_constrained(u, mid, ring, root)
        c2 = self._register_constrained(mid, v, ring, root)
        self.con_children[eid] = (c1, c2)
        return mid, (c1, c2)

    def move_vertex(self, vid: int, new_point: np.ndarray) -> bool:
        """Move a vertex if no incident triangle flips or degenerates."""
        new_point = np.asarray(new_point, dtype=float)
        for tid in self.cells_at_vertex(vid):
            a, b, c = self.tri_verts[tid]
            pa = new_point if a == vid else self.points[a]
            pb = new_point if b == vid else self.points[b]
            pc = new_point if c == vid else self.points[c]
            if orient2d(pa, pb, pc) <= 0:
                return False
        self.points[vid] = new_point.copy()
        return True

    def check(self) -> None:
        """Internal consistency assertions (used by tests)."""
        for tid, (a, b, c) in self.tri_verts.items():
            assert orient2d(self.points[a], self.points[b], self.points[c]) > 0, tid
            assert tid in self.tri_class, tid
        for key, tids in self._edge_tris.items():
            assert 1 <= len(tids) <= 2, (key, tids)
            if len(tids) == 2 and key not in self._con_by_pair:
                assert self.tri_class[tids[0]] == self.tri_class[tids[1]], key
            if key in self._con_by_pair and len(tids) == 2:
                assert self.tri_class[tids[0]] != self.tri_class[tids[1]], key
        for eid, (u, v) in self.con_edges.items():
            assert self._con_by_pair[_ekey(u, v)] == eid
