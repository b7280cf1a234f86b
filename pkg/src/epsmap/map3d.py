"""Directional thickness maps on 3D constrained complexes.

The growth engine is the 3D port of the 2D one: a region of
matching-class tets flooded outward from the anchor in arrival order,
where arrival is the minimax distance along the cell path.  Within a
convex tet the front reaches a facet exactly at the later of the tet's
arrival and the facet's closest approach, so the flood is the exact
reachable set at every radius.  Free faces grow the region; constrained
faces, surface edges and surface vertices produce contact events,
judged in that order at equal distance so growth settles before
verdicts.  A contact linked through covered surface to the anchor's own
faces is the front sliding onto its own run and merges; fresh contacts
break when the front occupies the wedge the witness direction points
through.  At surface edges the two flanking faces classify the contact
(covered on both sides is a saddle, joining two sheets of the front);
at surface vertices the radial fan of incident edges is read the same
way, with more than two covered/uncovered switches marking a saddle and
an all-covered fan a closure, which breaks only when the surface
component pinches the region inside it.

Faces and edges are analysed with moving centres (distances measured
from the whole element), split where their minimum is attained in the
interior, and their endpoint values are left to the vertex phase, which
recomputes every surface vertex with its own exclusions.  Sharp
features the growth cannot see, because the pinching elements are the
anchor's own exclusions, are caught by acute pre-tests and reported as
zeros on the side the wedge narrows.
"""

from __future__ import annotations

import heapq
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .complex3d import ConstrainedComplex3, MeshError, _ekey, point_in_mesh
from .geom import (
    AtVertex,
    OnEdgeInterior,
    OnTriangleInterior,
    TolerancePolicy,
    closest_point_on_element,
    closest_point_on_segment,
    closest_point_on_triangle,
    closest_pair_segment_element,
    closest_pair_triangle_element,
    orient3d,
    segment_tie_interval,
)
from .values import (
    AntipodeanEvent,
    AntipodeanKind,
    CellClass,
    Direction,
    EpsilonMap,
    EpsilonValue,
    MapEntry,
    matching_class,
)

__all__ = [
    "acute_zero_directions_3d",
    "analyze_vertex_3d",
    "compute_map_3d",
    "default_policy_3d",
]

# Face and edge analyses refine at most this many times per original.
MAX_SPLIT_DEPTH = 12

_FLAT_REL = 1e-12

# Exit fraction for the sliver gate on acute edge pairs: probes offset
# by this fraction of the step, on both sides of the wedge plane, must
# leave the pinched class.  A true sliver is thin across its own plane
# and loses material both ways; a sheet corner or a fat octant keeps it
# on at least one side and stays silent.
_SLIVER_FRACTION = 0.5


def default_policy_3d(cplx: ConstrainedComplex3) -> TolerancePolicy:
    return TolerancePolicy.for_bbox_diagonal(cplx.bbox_diagonal())


# ----------------------------------------------------------------------
# anchors


@dataclass
class _VertexAnchor3:
    vid: int
    point: np.ndarray
    excluded_vertices: frozenset[int] = frozenset()
    excluded_faces: frozenset[int] = frozenset()
    kind = "vertex"

    @classmethod
    def at(cls, cplx: ConstrainedComplex3, vid: int) -> "_VertexAnchor3":
        return cls(
            vid=vid,
            point=cplx.vertex_point(vid),
            excluded_vertices=frozenset([vid]),
            excluded_faces=frozenset(cplx.constrained_at_vertex(vid)),
        )

    def point_distance(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        return float(np.linalg.norm(q - self.point)), self.point

    def element_event(self, pts: np.ndarray):
        r = closest_point_on_element(self.point, pts)
        return r.distance, r.point, r.location, self.point, AtVertex(0)

    def corners(self) -> list[np.ndarray]:
        return [self.point]

    def initial_cells(self, cplx: ConstrainedComplex3, cls: CellClass) -> list[int]:
        sectors = cplx.sectors_at_vertex(self.vid, cls)
        if len(sectors) > 1:
            raise ValueError(
                f"vertex {self.vid} has {len(sectors)} {cls.value} sectors; surface must be manifold"
            )
        return sorted(sectors[0]) if sectors else []


@dataclass
class _EdgeAnchor3:
    u: int
    v: int
    a: np.ndarray
    b: np.ndarray
    excluded_vertices: frozenset[int] = frozenset()
    excluded_faces: frozenset[int] = frozenset()
    kind = "edge"

    @classmethod
    def at(cls, cplx: ConstrainedComplex3, u: int, v: int) -> "_EdgeAnchor3":
        # Faces sharing a vertex with the edge are part of the anchor's
        # own neighbourhood and never contact candidates.
        excl = set(cplx.constrained_at_vertex(u)) | set(cplx.constrained_at_vertex(v))
        return cls(
            u=u,
            v=v,
            a=cplx.vertex_point(u),
            b=cplx.vertex_point(v),
            excluded_vertices=frozenset([u, v]),
            excluded_faces=frozenset(excl),
        )

    def point_distance(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        r = closest_point_on_segment(q, self.a, self.b)
        return r.distance, r.point

    def element_event(self, pts: np.ndarray):
        pr = closest_pair_segment_element(self.a, self.b, pts)
        return pr.distance, pr.element_point, pr.element_location, pr.anchor_point, pr.anchor_location

    def corners(self) -> list[np.ndarray]:
        return [self.a, self.b]

    def initial_cells(self, cplx: ConstrainedComplex3, cls: CellClass) -> list[int]:
        return sorted(
            t for t in cplx.tets_around_edge(self.u, self.v) if cplx.tet_class[t] == cls
        )


@dataclass
class _FaceAnchor3:
    fid: int
    pts: np.ndarray
    excluded_vertices: frozenset[int] = frozenset()
    excluded_faces: frozenset[int] = frozenset()
    kind = "face"

    @classmethod
    def at(cls, cplx: ConstrainedComplex3, fid: int) -> "_FaceAnchor3":
        tri = cplx.con_faces[fid]
        excl: set[int] = set()
        for w in tri:
            excl |= cplx.constrained_at_vertex(w)
        return cls(
            fid=fid,
            pts=cplx.face_points(fid),
            excluded_vertices=frozenset(tri),
            excluded_faces=frozenset(excl),
        )

    def point_distance(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        r = closest_point_on_triangle(q, self.pts[0], self.pts[1], self.pts[2])
        return r.distance, r.point

    def element_event(self, pts: np.ndarray):
        pr = closest_pair_triangle_element(self.pts, pts)
        return pr.distance, pr.element_point, pr.element_location, pr.anchor_point, pr.anchor_location

    def corners(self) -> list[np.ndarray]:
        return [self.pts[0], self.pts[1], self.pts[2]]

    def initial_cells(self, cplx: ConstrainedComplex3, cls: CellClass) -> list[int]:
        flank = cplx.flank_tet(self.fid, cls)
        return [flank] if flank is not None else []


# ----------------------------------------------------------------------
# growth engine


@dataclass
class GrowOutcome3:
    kind: str  # break | capped | exhausted
    distance: float = 0.0
    event: AntipodeanEvent | None = None
    host_kind: str = ""
    host_id: object = None  # fid | (u, v) | vid
    anchor_point: np.ndarray | None = None
    anchor_loc: object = None
    touched_hull: bool = False
    notes: list[str] = field(default_factory=list)


def _grow_region_3d(
    cplx: ConstrainedComplex3,
    anchor,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None = None,
) -> GrowOutcome3:
    cls = matching_class(direction)
    arrival: dict[int, float] = {}
    heap: list[tuple[float, int, int, int, int, float]] = []
    best_v: dict[int, float] = {}
    popped_v: set[int] = set()
    best_ce: dict[int, float] = {}
    popped_ce: set[int] = set()
    best_edge: dict[tuple[int, int], float] = {}
    popped_edge: set[tuple[int, int]] = set()
    best_free: dict[tuple[int, int, int], float] = {}
    notes: list[str] = []
    touched_hull = False
    inf = float("inf")

    def push_vertex(vid: int, t: float) -> None:
        if vid in popped_v:
            return
        d, _ = anchor.point_distance(cplx.vertex_point(vid))
        key = max(t, d)
        if key >= best_v.get(vid, inf):
            return
        best_v[vid] = key
        heapq.heappush(heap, (key, 3, vid, 0, 0, d))

    def interior_foot(pts: np.ndarray) -> tuple[float, bool]:
        """Distance to the element and whether the nearest approach
        includes a point in the element's interior.

        Moving-centre anchors can hide a parallel stretch behind a
        corner representative, so anchor corners and the anchor middle
        are probed as well.
        """
        d, _, loc, _, _ = anchor.element_event(pts)
        if isinstance(loc, (OnEdgeInterior, OnTriangleInterior)):
            return d, True
        if anchor.kind == "vertex":
            return d, False
        near = d * (1.0 + _FLAT_REL) + policy.absolute_eps
        probes = anchor.corners()
        probes.append(np.mean(anchor.corners(), axis=0))
        for q in probes:
            r = closest_point_on_element(q, pts)
            if isinstance(r.location, (OnEdgeInterior, OnTriangleInterior)) and r.distance <= near:
                return d, True
        return d, False

    def push_ce(fid: int, t: float) -> None:
        if fid in anchor.excluded_faces or fid in popped_ce:
            return
        d, interior = interior_foot(cplx.face_points(fid))
        if not interior:
            return
        key = max(t, d)
        if key >= best_ce.get(fid, inf):
            return
        best_ce[fid] = key
        heapq.heappush(heap, (key, 1, fid, 0, 0, d))

    def push_edge(u: int, v: int, t: float) -> None:
        pair = _ekey(u, v)
        if pair in popped_edge:
            return
        if u in anchor.excluded_vertices or v in anchor.excluded_vertices:
            return
        d, _, _, _, _ = anchor.element_event(cplx.edge_points(u, v))
        key = max(t, d)
        if key >= best_edge.get(pair, inf):
            return
        best_edge[pair] = key
        heapq.heappush(heap, (key, 2, pair[0], pair[1], 0, d))

    def push_free(key3: tuple[int, int, int], t: float) -> None:
        pts = np.stack([cplx.vertex_point(w) for w in key3])
        d, _, _, _, _ = anchor.element_event(pts)
        key = max(t, d)
        if key >= best_free.get(key3, inf):
            return
        best_free[key3] = key
        heapq.heappush(heap, (key, 0, key3[0], key3[1], key3[2], d))

    def add_cell(tid: int, t: float) -> None:
        nonlocal touched_hull
        if tid in arrival:
            return
        arrival[tid] = t
        verts = cplx.tet_verts[tid]
        for w in verts:
            push_vertex(w, t)
        a, b, c, d4 = verts
        for u, v in ((a, b), (a, c), (a, d4), (b, c), (b, d4), (c, d4)):
            if cplx.is_surface_edge(u, v):
                push_edge(u, v, t)
        for key3 in ConstrainedComplex3._tet_face_keys(verts):
            fid = cplx.constrained_id(*key3)
            if fid is not None:
                push_ce(fid, t)
                continue
            tets = cplx.tets_of_face(*key3)
            if len(tets) == 1:
                touched_hull = True
            elif any(o != tid and o not in arrival for o in tets):
                push_free(key3, t)

    def grow_at_vertex(vid: int, t: float) -> None:
        for sector in cplx.sectors_at_vertex(vid, cls):
            if sector & arrival.keys():
                for tid in sorted(sector - arrival.keys()):
                    add_cell(tid, t)

    def face_min_dist(fid: int, center: np.ndarray) -> float:
        pts = cplx.face_points(fid)
        return closest_point_on_triangle(center, pts[0], pts[1], pts[2]).distance

    def edge_min_dist(u: int, v: int, center: np.ndarray) -> float:
        return closest_point_on_segment(center, cplx.vertex_point(u), cplx.vertex_point(v)).distance

    def contact_is_home(start: list[int], witness: np.ndarray, radius: float) -> bool:
        """Whether the contacted surface piece is linked, through edges
        inside the witness ball, to the surface the anchor lives on."""
        slack = radius * (1.0 + policy.tie_eps) + policy.absolute_eps
        seen = set(start)
        stack = list(start)
        while stack:
            f = stack.pop()
            if f in anchor.excluded_faces:
                return True
            fa, fb, fc = cplx.con_faces[f]
            for u, v in ((fa, fb), (fb, fc), (fc, fa)):
                if edge_min_dist(u, v, witness) > slack:
                    continue
                for nxt in cplx.constrained_at_edge(u, v):
                    if nxt in seen or face_min_dist(nxt, witness) > slack:
                        continue
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def anchor_witnesses(host_pts: np.ndarray, radius: float) -> list[np.ndarray]:
        """Representatives of the band of tied ball centres on a moving
        anchor; every one must see a contact linked for it to merge."""
        limit = radius * (1.0 + policy.tie_eps) + policy.absolute_eps
        out: list[np.ndarray] = []
        corners = anchor.corners()
        for q in corners:
            if closest_point_on_element(q, host_pts).distance <= limit:
                out.append(q)
        pairs = [(corners[i], corners[(i + 1) % len(corners)]) for i in range(len(corners))] if len(corners) == 3 else [(corners[0], corners[1])]
        for pa, pb in pairs:
            iv = segment_tie_interval(pa, pb, host_pts, limit)
            if iv is None:
                continue
            span = pb - pa
            for t_w in (0.5 * (iv[0] + iv[1]), iv[0], iv[1]):
                out.append(pa + t_w * span)
        return out

    def ce_contact_is_home(fid: int, pts: np.ndarray, witness: np.ndarray, radius: float) -> bool:
        if not contact_is_home([fid], witness, radius):
            return False
        if anchor.kind == "vertex":
            return True
        for w in anchor_witnesses(pts, radius):
            # A band representative further out carries its own tangent
            # radius; reusing the canonical radius would leave its ball
            # a hair short of the contact it is supposed to contain.
            r_w = max(radius, closest_point_on_element(w, pts).distance)
            if not contact_is_home([fid], w, r_w):
                return False
        return True

    def covered_connected(f1: int, f2: int, avoid_edge: tuple[int, int], center: np.ndarray, r: float) -> bool:
        """Can the covered surface link the two flanks of an edge
        without crossing the edge itself?"""
        slack = r + max(policy.absolute_eps, policy.tie_eps * r)
        avoid = _ekey(*avoid_edge)
        seen = {f1}
        stack = [f1]
        while stack:
            f = stack.pop()
            if f == f2:
                return True
            fa, fb, fc = cplx.con_faces[f]
            for u, v in ((fa, fb), (fb, fc), (fc, fa)):
                if _ekey(u, v) == avoid:
                    continue
                if edge_min_dist(u, v, center) > slack:
                    continue
                for nxt in cplx.constrained_at_edge(u, v):
                    if nxt in seen or face_min_dist(nxt, center) > slack:
                        continue
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def closure_imminent(fid: int, center: np.ndarray, r: float) -> bool:
        """Whether the whole surface component through fid is covered:
        every face corner within the witness ball, up to ties."""
        slack = r * (1.0 + policy.tie_eps) + policy.absolute_eps
        for f in cplx.surface_component_faces(fid):
            for w in cplx.con_faces[f]:
                d, _ = anchor.point_distance(cplx.vertex_point(w))
                if d > slack:
                    return False
        return True

    def region_probe() -> np.ndarray:
        return cplx.tet_points(seed_tid).mean(axis=0)

    def facing_tets_vertex(vid: int, target: np.ndarray) -> list[int]:
        """Tets at vid whose cone contains the direction toward the
        witness; flanking tets when it runs along a free face or edge,
        none when the surface itself shields it."""
        py = cplx.vertex_point(vid)
        candidates = sorted(cplx.cells_at_vertex(vid))
        for tid in candidates:
            verts = cplx.tet_verts[tid]
            others = [w for w in verts if w != vid]
            ok = True
            for i in range(3):
                o1, o2 = others[i], others[(i + 1) % 3]
                o3 = others[(i + 2) % 3]
                ref = orient3d(py, cplx.vertex_point(o1), cplx.vertex_point(o2), cplx.vertex_point(o3))
                s = orient3d(py, cplx.vertex_point(o1), cplx.vertex_point(o2), target)
                if s != ref:
                    ok = False
                    break
            if ok:
                return [tid]
        for tid in candidates:
            verts = cplx.tet_verts[tid]
            others = [w for w in verts if w != vid]
            zero_faces: list[tuple[int, int]] = []
            ok = True
            for i in range(3):
                o1, o2 = others[i], others[(i + 1) % 3]
                o3 = others[(i + 2) % 3]
                ref = orient3d(py, cplx.vertex_point(o1), cplx.vertex_point(o2), cplx.vertex_point(o3))
                s = orient3d(py, cplx.vertex_point(o1), cplx.vertex_point(o2), target)
                if s == 0:
                    zero_faces.append((o1, o2))
                elif s != ref:
                    ok = False
                    break
            if not ok or not zero_faces:
                continue
            if len(zero_faces) == 1:
                o1, o2 = zero_faces[0]
                if cplx.constrained_id(vid, o1, o2) is not None:
                    return []
                return sorted(cplx.tets_of_face(vid, o1, o2))
            if len(zero_faces) == 2:
                shared = set(zero_faces[0]) & set(zero_faces[1])
                if len(shared) == 1:
                    w = shared.pop()
                    pw = cplx.vertex_point(w)
                    if float(np.dot(target - py, pw - py)) <= 0.0:
                        continue
                    if cplx.is_surface_edge(vid, w):
                        return []
                    return sorted(cplx.tets_around_edge(vid, w))
        return []

    def facing_tets_edge(u: int, v: int, target: np.ndarray) -> list[int]:
        pu, pv = cplx.vertex_point(u), cplx.vertex_point(v)
        candidates = sorted(cplx.tets_around_edge(u, v))
        for tid in candidates:
            others = [w for w in cplx.tet_verts[tid] if w not in (u, v)]
            p, q = others
            pp, pq = cplx.vertex_point(p), cplx.vertex_point(q)
            s1 = orient3d(pu, pv, pp, target)
            r1 = orient3d(pu, pv, pp, pq)
            s2 = orient3d(pu, pv, pq, target)
            r2 = orient3d(pu, pv, pq, pp)
            if s1 == r1 and s2 == r2:
                return [tid]
        for tid in candidates:
            others = [w for w in cplx.tet_verts[tid] if w not in (u, v)]
            p, q = others
            pp, pq = cplx.vertex_point(p), cplx.vertex_point(q)
            for w, pw, other, po in ((p, pp, q, pq), (q, pq, p, pp)):
                if orient3d(pu, pv, pw, target) == 0 and orient3d(pu, pv, po, target) == orient3d(pu, pv, po, pw):
                    if cplx.constrained_id(u, v, w) is not None:
                        return []
                    return sorted(cplx.tets_of_face(u, v, w))
        return []

    def front_occupies(cands: list[int]) -> bool:
        return any(cplx.tet_class[t] == cls and t in arrival for t in cands)

    popped_v.update(anchor.excluded_vertices)
    initial = anchor.initial_cells(cplx, cls)
    if not initial:
        return GrowOutcome3("exhausted", touched_hull=False, notes=["empty growth region"])
    seed_tid = initial[0]
    for tid in initial:
        add_cell(tid, 0.0)
    for vid in sorted(anchor.excluded_vertices):
        grow_at_vertex(vid, 0.0)

    last_d = 0.0
    monotone_warned = False

    while heap:
        key, rank, i1, i2, i3, d = heapq.heappop(heap)
        if threshold is not None and key >= threshold:
            return GrowOutcome3("capped", distance=key, touched_hull=touched_hull, notes=notes)
        if key < last_d - policy.absolute_eps and not monotone_warned:
            notes.append(f"event distance decreased ({key:.6g} after {last_d:.6g})")
            monotone_warned = True
        last_d = max(last_d, key)

        if rank == 0:  # free face, grow across
            key3 = (i1, i2, i3)
            if key > best_free.get(key3, inf):
                continue
            tets = cplx.tets_of_face(*key3)
            for tid in tets:
                if tid not in arrival and cplx.tet_class.get(tid) == cls:
                    if any(t in arrival for t in tets if t != tid):
                        add_cell(tid, key)
            continue

        if rank == 1:  # constrained face, interior foot
            fid = i1
            if fid in popped_ce or key > best_ce.get(fid, inf):
                continue
            popped_ce.add(fid)
            if fid not in cplx.con_faces:
                continue
            pts = cplx.face_points(fid)
            _, interior = interior_foot(pts)
            if not interior:
                continue
            d2, y, loc, center, aloc = anchor.element_event(pts)
            s = orient3d(pts[0], pts[1], pts[2], center)
            if s == 0:
                continue
            flank = cplx.side_tet(fid, s)
            if flank is None or cplx.tet_class[flank] != cls:
                continue
            if ce_contact_is_home(fid, pts, center, key):
                continue
            event = AntipodeanEvent(
                kind=AntipodeanKind.ORTHOGONAL_FOOT,
                contact=tuple(float(x) for x in y),
                center=tuple(float(x) for x in center),
                host_kind="triangle",
                host_id=fid,
            )
            return GrowOutcome3(
                "break",
                distance=key,
                event=event,
                host_kind="triangle",
                host_id=fid,
                anchor_point=center,
                anchor_loc=aloc,
                touched_hull=touched_hull,
                notes=notes,
            )

        if rank == 2:  # surface edge event
            pair = (i1, i2)
            if pair in popped_edge or key > best_edge.get(pair, inf):
                continue
            popped_edge.add(pair)
            if not cplx.is_surface_edge(*pair):
                continue
            pts = cplx.edge_points(*pair)
            _, interior = interior_foot(pts)
            if not interior:
                continue
            d2, y, loc, center, aloc = anchor.element_event(pts)
            flanks = sorted(cplx.constrained_at_edge(*pair))
            internal = [
                f for f in flanks if face_min_dist(f, center) < key * (1.0 - policy.tie_eps)
            ]
            k = len(internal)
            broke = False
            kind = None
            if internal and contact_is_home(internal, center, key):
                if k == 2 and covered_connected(flanks[0], flanks[1], pair, center, key):
                    if closure_imminent(flanks[0], center, key):
                        if cplx.component_encloses(flanks[0], region_probe(), policy.tie_eps):
                            broke = True
                            kind = AntipodeanKind.VERTEX_BOTH_INTERNAL
                    else:
                        broke = True
                        kind = AntipodeanKind.EDGE_MIDDLE
            else:
                cands = facing_tets_edge(*pair, center)
                if front_occupies(cands):
                    broke = True
                    kind = (
                        AntipodeanKind.EDGE_MIDDLE if k == 2 else AntipodeanKind.VERTEX_BOTH_EXTERNAL
                    )
            if broke:
                event = AntipodeanEvent(
                    kind=kind,
                    contact=tuple(float(x) for x in y),
                    center=tuple(float(x) for x in center),
                    host_kind="edge",
                    host_id=cplx.surface_edge_id(*pair),
                )
                return GrowOutcome3(
                    "break",
                    distance=key,
                    event=event,
                    host_kind="edge",
                    host_id=pair,
                    anchor_point=center,
                    anchor_loc=aloc,
                    touched_hull=touched_hull,
                    notes=notes,
                )
            continue

        # rank == 3: vertex event
        vid = i1
        if vid in popped_v or key > best_v.get(vid, inf):
            continue
        popped_v.add(vid)
        incident = sorted(cplx.constrained_at_vertex(vid))
        if not incident:
            grow_at_vertex(vid, key)
            continue
        _, center = anchor.point_distance(cplx.vertex_point(vid))
        fan = cplx.fan_at_vertex(vid)
        flags = [
            edge_min_dist(vid, w, center) < key * (1.0 - policy.tie_eps) for w in fan
        ]
        k_int = sum(flags)
        switches = sum(1 for i in range(len(fan)) if flags[i] != flags[(i + 1) % len(fan)])
        internal_faces = sorted(
            {
                f
                for i, w in enumerate(fan)
                if flags[i]
                for f in cplx.constrained_at_edge(vid, w)
            }
        )
        broke = False
        kind = None
        ev_switches = 0
        if k_int and contact_is_home(internal_faces, center, key):
            if switches > 2:
                broke = True
                kind = AntipodeanKind.SWITCH_COUNT
                ev_switches = switches
            elif k_int == len(fan):
                if closure_imminent(incident[0], center, key) and cplx.component_encloses(
                    incident[0], region_probe(), policy.tie_eps
                ):
                    broke = True
                    kind = AntipodeanKind.VERTEX_BOTH_INTERNAL
        else:
            cands = facing_tets_vertex(vid, center)
            if front_occupies(cands):
                broke = True
                if switches > 2:
                    kind = AntipodeanKind.SWITCH_COUNT
                    ev_switches = switches
                elif k_int == len(fan):
                    kind = AntipodeanKind.VERTEX_BOTH_INTERNAL
                else:
                    kind = AntipodeanKind.VERTEX_BOTH_EXTERNAL
        if broke:
            contact = cplx.vertex_point(vid)
            event = AntipodeanEvent(
                kind=kind,
                contact=tuple(float(x) for x in contact),
                center=tuple(float(x) for x in center),
                host_kind="vertex",
                host_id=vid,
                switches=ev_switches,
            )
            apoint, aloc = _anchor_param(anchor, contact)
            return GrowOutcome3(
                "break",
                distance=key,
                event=event,
                host_kind="vertex",
                host_id=vid,
                anchor_point=apoint,
                anchor_loc=aloc,
                touched_hull=touched_hull,
                notes=notes,
            )
        grow_at_vertex(vid, key)

    return GrowOutcome3("exhausted", touched_hull=touched_hull, notes=notes)


def _anchor_param(anchor, contact) -> tuple[np.ndarray, object]:
    q = np.asarray(contact, dtype=float)
    if anchor.kind == "vertex":
        return anchor.point, AtVertex(0)
    if anchor.kind == "edge":
        r = closest_point_on_segment(q, anchor.a, anchor.b)
        return r.point, r.location
    r = closest_point_on_triangle(q, anchor.pts[0], anchor.pts[1], anchor.pts[2])
    return r.point, r.location


def _outcome_value(outcome: GrowOutcome3, threshold: float | None) -> EpsilonValue:
    if outcome.kind == "break":
        return EpsilonValue.finite(outcome.distance)
    if outcome.kind == "capped":
        return EpsilonValue.thick_beyond(threshold)
    if threshold is not None:
        return EpsilonValue.thick_beyond(threshold)
    return EpsilonValue.unbounded()


# ----------------------------------------------------------------------
# sharp features


def _probe_material(cplx: ConstrainedComplex3, p: np.ndarray, tie_eps: float) -> bool:
    verts = np.asarray(cplx.points)
    tris = np.asarray([cplx.con_faces[f] for f in cplx.live_constrained()], dtype=int)
    return point_in_mesh(p, verts, tris, tie_eps)


def _pinch_direction(
    cplx: ConstrainedComplex3,
    apex: np.ndarray,
    g: np.ndarray,
    n: np.ndarray,
    delta: float,
    policy: TolerancePolicy,
    exit_frac: float | None,
) -> Direction | None:
    """Side of a suspected pinch along bisector g at the apex.

    Probes both sides of the wedge plane; disagreement means the
    bisector runs along the surface (a flat fan, not a pinch).  With
    exit_frac, probes that far along both wedge normals must leave the
    pinched side: a sliver is thin across its own plane, while a sheet
    corner or a fat solid angle keeps material on at least one side.
    """
    g = g / np.linalg.norm(g)
    if np.linalg.norm(n) < 1e-12:
        seed = np.array([1.0, 0.0, 0.0]) if abs(g[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        n = np.cross(g, seed)
    n = n / np.linalg.norm(n)
    p = apex + delta * g
    off = 1e-3 * delta * n
    try:
        m_plus = _probe_material(cplx, p + off, policy.tie_eps)
        m_minus = _probe_material(cplx, p - off, policy.tie_eps)
        if m_plus != m_minus:
            return None
        if exit_frac is not None:
            step = exit_frac * delta * n
            if _probe_material(cplx, p + step, policy.tie_eps) == m_plus:
                return None
            if _probe_material(cplx, p - step, policy.tie_eps) == m_plus:
                return None
    except MeshError:
        return None
    return Direction.POSITIVE if m_plus else Direction.NEGATIVE


def _bary_interior(pts: np.ndarray, q: np.ndarray, margin: float) -> bool:
    a, b, c = pts
    v0 = b - a
    v1 = c - a
    v2 = q - a
    d00 = float(np.dot(v0, v0))
    d01 = float(np.dot(v0, v1))
    d11 = float(np.dot(v1, v1))
    d20 = float(np.dot(v2, v0))
    d21 = float(np.dot(v2, v1))
    denom = d00 * d11 - d01 * d01
    if denom <= 0.0:
        return False
    v = (d11 * d20 - d01 * d21) / denom
    w = (d00 * d21 - d01 * d20) / denom
    u = 1.0 - v - w
    return u > margin and v > margin and w > margin


def acute_zero_directions_3d(
    cplx: ConstrainedComplex3, vid: int, policy: TolerancePolicy
) -> set[Direction]:
    """Directions in which this surface vertex is a sharp feature.

    Three pinch patterns are tested: two incident edges spanning a
    transversally thin sliver not bridged by a shared face; an incident
    edge whose shadow falls across the interior of an incident face;
    and two incident faces folded past a right angle (obtuse outward
    normals).  Each fires on the side the probe finds the wedge
    narrowing, so a sharp spike zeroes the solid map while a sharp
    notch zeroes the complement map.
    """
    pv = cplx.vertex_point(vid)
    fan = cplx.fan_at_vertex(vid)
    faces = sorted(cplx.constrained_at_vertex(vid))
    if not fan:
        return set()
    edge_dirs: dict[int, np.ndarray] = {}
    edge_lens: dict[int, float] = {}
    for w in fan:
        vec = cplx.vertex_point(w) - pv
        length = float(np.linalg.norm(vec))
        edge_dirs[w] = vec / length
        edge_lens[w] = length
    delta = 1e-3 * min(edge_lens.values())
    out: set[Direction] = set()

    # Edge pairs spanning a sliver with no face between them.  The
    # exit probes keep this silent for acute pairs that merely run
    # along a sheet or bound a fat corner: those stay covered on one
    # side, a true sliver loses both.
    for i, w1 in enumerate(fan):
        for w2 in fan[i + 1 :]:
            if cplx.constrained_at_edge(vid, w1) & cplx.constrained_at_edge(vid, w2):
                continue
            e1, e2 = edge_dirs[w1], edge_dirs[w2]
            if float(np.dot(e1, e2)) <= policy.tie_eps:
                continue
            got = _pinch_direction(
                cplx, pv, e1 + e2, np.cross(e1, e2), delta, policy, exit_frac=_SLIVER_FRACTION
            )
            if got is not None:
                out.add(got)

    # Edges whose shadow falls across the interior of an incident face:
    # the space between the edge and the face pinches to nothing at the
    # vertex.
    for w in fan:
        e = edge_dirs[w]
        for fid in faces:
            tri = cplx.con_faces[fid]
            if w in tri:
                continue
            pts = cplx.face_points(fid)
            normal = np.cross(pts[1] - pts[0], pts[2] - pts[0])
            normal = normal / np.linalg.norm(normal)
            dip = float(np.dot(e, normal))
            if abs(dip) <= policy.tie_eps:
                continue
            proj = e - dip * normal
            plen = float(np.linalg.norm(proj))
            if plen <= policy.tie_eps:
                continue
            proj = proj / plen
            if not _bary_interior(pts, pv + delta * proj, 1e-9):
                continue
            got = _pinch_direction(cplx, pv, e + proj, normal, delta, policy, exit_frac=None)
            if got is not None:
                out.add(got)

    # Face pairs folded past a right angle: creases, cones, and folds
    # sharing this vertex.  The probe direction degenerates only when
    # the two faces extend exactly oppositely, a doubled-sheet
    # configuration the mesh validator already rejects.
    for i, f1 in enumerate(faces):
        pts1 = cplx.face_points(f1)
        n1 = np.cross(pts1[1] - pts1[0], pts1[2] - pts1[0])
        n1 = n1 / np.linalg.norm(n1)
        c1 = pts1.mean(axis=0) - pv
        for f2 in faces[i + 1 :]:
            pts2 = cplx.face_points(f2)
            n2 = np.cross(pts2[1] - pts2[0], pts2[2] - pts2[0])
            n2 = n2 / np.linalg.norm(n2)
            if float(np.dot(n1, n2)) >= -policy.tie_eps:
                continue
            c2 = pts2.mean(axis=0) - pv
            g = c1 / np.linalg.norm(c1) + c2 / np.linalg.norm(c2)
            if float(np.linalg.norm(g)) < 1e-6:
                continue
            got = _pinch_direction(cplx, pv, g, n1 + n2, delta, policy, exit_frac=None)
            if got is not None:
                out.add(got)
    return out


# ----------------------------------------------------------------------
# per-element analyses


def analyze_vertex_3d(
    cplx: ConstrainedComplex3,
    vid: int,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None = None,
) -> MapEntry:
    if direction in acute_zero_directions_3d(cplx, vid, policy):
        return MapEntry(EpsilonValue.zero(), source="acute_zero")
    outcome = _grow_region_3d(cplx, _VertexAnchor3.at(cplx, vid), direction, policy, threshold)
    return MapEntry(_outcome_value(outcome, threshold), event=outcome.event, source="vertex_analysis")


def _host_points(cplx: ConstrainedComplex3, outcome: GrowOutcome3) -> np.ndarray:
    if outcome.host_kind == "vertex":
        return cplx.vertex_point(outcome.host_id)[None, :]
    if outcome.host_kind == "edge":
        return cplx.edge_points(*outcome.host_id)
    return cplx.face_points(outcome.host_id)


def _entry_for_center(outcome: GrowOutcome3, host_pts: np.ndarray, center: np.ndarray, source: str) -> MapEntry:
    r = closest_point_on_element(center, host_pts)
    event = AntipodeanEvent(
        kind=outcome.event.kind,
        contact=tuple(float(x) for x in r.point),
        center=tuple(float(x) for x in center),
        host_kind=outcome.event.host_kind,
        host_id=outcome.event.host_id,
        switches=outcome.event.switches,
    )
    return MapEntry(EpsilonValue.finite(outcome.distance), event=event, source=source)


@dataclass
class _EdgeResult3:
    eid: int
    kind: str  # entry | split
    entry: MapEntry | None = None
    split_t: float = 0.0
    distance: float = 0.0


def _analyze_surface_edge(
    cplx: ConstrainedComplex3,
    eid: int,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None,
) -> _EdgeResult3:
    u, v = cplx.edge_verts[eid]
    for endpoint in (u, v):
        if direction in acute_zero_directions_3d(cplx, endpoint, policy):
            return _EdgeResult3(eid, "entry", MapEntry(EpsilonValue.zero(), source="acute_zero"))

    anchor = _EdgeAnchor3.at(cplx, u, v)
    outcome = _grow_region_3d(cplx, anchor, direction, policy, threshold)
    if outcome.kind != "break":
        return _EdgeResult3(
            eid, "entry", MapEntry(_outcome_value(outcome, threshold), source="edge_analysis")
        )

    d = outcome.distance
    length = float(np.linalg.norm(anchor.b - anchor.a))
    snap = policy.absolute_eps / length
    host_pts = _host_points(cplx, outcome)
    limit = d * (1.0 + policy.tie_eps) + policy.absolute_eps
    iv_tie = segment_tie_interval(anchor.a, anchor.b, host_pts, limit)
    iv_flat = segment_tie_interval(
        anchor.a, anchor.b, host_pts, d * (1.0 + _FLAT_REL) + 0.1 * policy.absolute_eps
    )
    w_tie = iv_tie[1] - iv_tie[0] if iv_tie else 0.0
    w_flat = iv_flat[1] - iv_flat[0] if iv_flat else 0.0
    is_flat = w_tie * length > 2.0 * policy.absolute_eps and w_flat > 0.5 * w_tie

    if is_flat:
        for corner in (anchor.a, anchor.b):
            if closest_point_on_element(corner, host_pts).distance <= limit:
                return _EdgeResult3(eid, "entry", _entry_for_center(outcome, host_pts, corner, "edge_analysis"))
        t_split = 0.5 * (iv_flat[0] + iv_flat[1])
    else:
        loc = outcome.anchor_loc
        if isinstance(loc, OnEdgeInterior):
            t_split = loc.param
        else:
            t_split = float(loc.index) if isinstance(loc, AtVertex) else 0.0

    if t_split <= snap or t_split >= 1.0 - snap:
        center = anchor.a if t_split <= snap else anchor.b
        return _EdgeResult3(eid, "entry", _entry_for_center(outcome, host_pts, center, "edge_analysis"))
    return _EdgeResult3(eid, "split", split_t=t_split, distance=d)


@dataclass
class _FaceResult3:
    fid: int
    kind: str  # entry | split
    entry: MapEntry | None = None
    split_point: np.ndarray | None = None
    distance: float = 0.0


def _face_acute_zero(
    cplx: ConstrainedComplex3, fid: int, direction: Direction, policy: TolerancePolicy
) -> bool:
    # Any sharp corner drives the minimum over the closed face to zero.
    # The per-vertex tests already include shadows over this face, so no
    # separate face-local sweep is needed.
    return any(
        direction in acute_zero_directions_3d(cplx, w, policy) for w in cplx.con_faces[fid]
    )


def _analyze_face(
    cplx: ConstrainedComplex3,
    fid: int,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None,
) -> _FaceResult3:
    if _face_acute_zero(cplx, fid, direction, policy):
        return _FaceResult3(fid, "entry", MapEntry(EpsilonValue.zero(), source="acute_zero"))

    anchor = _FaceAnchor3.at(cplx, fid)
    outcome = _grow_region_3d(cplx, anchor, direction, policy, threshold)
    if outcome.kind != "break":
        return _FaceResult3(
            fid, "entry", MapEntry(_outcome_value(outcome, threshold), source="triangle_analysis")
        )

    d = outcome.distance
    host_pts = _host_points(cplx, outcome)
    limit = d * (1.0 + policy.tie_eps) + policy.absolute_eps
    loc = outcome.anchor_loc
    if isinstance(loc, AtVertex):
        corner = anchor.pts[int(loc.index)]
        return _FaceResult3(fid, "entry", _entry_for_center(outcome, host_pts, corner, "triangle_analysis"))
    # A minimum tied at a corner is already represented there; splitting
    # would only chase the plateau.
    for corner in anchor.pts:
        if closest_point_on_element(corner, host_pts).distance <= limit:
            return _FaceResult3(fid, "entry", _entry_for_center(outcome, host_pts, corner, "triangle_analysis"))
    return _FaceResult3(fid, "split", split_point=np.asarray(outcome.anchor_point, dtype=float), distance=d)


# ----------------------------------------------------------------------
# pipeline


def _parallel(workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def _run_batch(fn, items, nworkers):
    if nworkers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def _directional_map_3d(
    cplx: ConstrainedComplex3,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None,
    workers: int | None,
) -> EpsilonMap:
    cls = matching_class(direction)
    if cls == CellClass.EXTERIOR and not cplx.surface_convex:
        if not any(c == CellClass.EXTERIOR for c in cplx.tet_class.values()):
            raise ValueError(
                "complement analysis of a non-convex shape needs a tetrahedrization "
                "covering its convex hull"
            )
    nworkers = _parallel(workers)
    diagnostics: list[str] = []

    def covered_by_ancestor(node: int, parents: dict[int, int], entries: dict) -> bool:
        while node in parents:
            node = parents[node]
            if node in entries:
                return True
        return False

    face_entries: dict[int, MapEntry] = {}
    depth = {fid: 0 for fid in cplx.live_constrained()}
    queue = cplx.live_constrained()

    while queue:
        results = _run_batch(
            lambda f: _analyze_face(cplx, f, direction, policy, threshold), queue, nworkers
        )
        for res in sorted(results, key=lambda r: r.fid):
            if res.kind != "split":
                face_entries[res.fid] = res.entry
                continue
            if res.fid not in cplx.con_faces:
                # A sibling split consumed this face; find the live
                # descendant holding the point and split that instead.
                carriers = [
                    f
                    for f in cplx.live_descendants(res.fid)
                    if closest_point_on_triangle(res.split_point, *cplx.face_points(f)).distance
                    <= policy.absolute_eps
                ]
                if not carriers:
                    continue
                target = carriers[0]
                depth.setdefault(target, depth.get(res.fid, 0))
            else:
                target = res.fid
            if depth.get(target, 0) >= MAX_SPLIT_DEPTH:
                diagnostics.append(
                    f"face {target}: split depth cap reached, keeping minimum {res.distance:.6g}"
                )
                face_entries[target] = MapEntry(
                    EpsilonValue.finite(res.distance), source="triangle_analysis"
                )
                continue
            before = set(cplx.con_faces)
            kind, _, _ = cplx.split_face(target, res.split_point, policy.absolute_eps)
            if kind == "vertex":
                # Snapped to an existing vertex: the value lives there.
                face_entries[target] = MapEntry(
                    EpsilonValue.finite(res.distance), source="triangle_analysis"
                )
                continue
            for kid in set(cplx.con_faces) - before:
                depth[kid] = depth.get(target, 0) + 1
        parents = {kid: p for p, kids in cplx.con_children.items() for kid in kids}
        queue = sorted(
            f
            for f in cplx.con_faces
            if f not in face_entries and not covered_by_ancestor(f, parents, face_entries)
        )

    edge_entries: dict[int, MapEntry] = {}
    edepth = {eid: 0 for eid in cplx.live_surface_edge_ids()}
    equeue = cplx.live_surface_edge_ids()

    while equeue:
        results = _run_batch(
            lambda e: _analyze_surface_edge(cplx, e, direction, policy, threshold),
            equeue,
            nworkers,
        )
        for res in sorted(results, key=lambda r: r.eid):
            if res.kind != "split":
                edge_entries[res.eid] = res.entry
                continue
            if edepth.get(res.eid, 0) >= MAX_SPLIT_DEPTH:
                diagnostics.append(
                    f"edge {res.eid}: split depth cap reached, keeping minimum {res.distance:.6g}"
                )
                edge_entries[res.eid] = MapEntry(
                    EpsilonValue.finite(res.distance), source="edge_analysis"
                )
                continue
            u, v = cplx.edge_verts[res.eid]
            if cplx.surface_edge_id(u, v) != res.eid:
                continue  # consumed by a sibling split; descendants re-queue
            pu, pv = cplx.vertex_point(u), cplx.vertex_point(v)
            point = pu + res.split_t * (pv - pu)
            before = set(cplx.live_surface_edge_ids())
            cplx.split_surface_edge(u, v, point)
            # Halves and fresh spokes alike inherit the parent's depth
            # budget so refinement cascades stay bounded.
            for kid in set(cplx.live_surface_edge_ids()) - before:
                edepth[kid] = edepth.get(res.eid, 0) + 1
        parents = {kid: p for p, kids in cplx.edge_children.items() for kid in kids}
        live = set(cplx.live_surface_edge_ids())
        equeue = sorted(
            e
            for e in live
            if e not in edge_entries and not covered_by_ancestor(e, parents, edge_entries)
        )

    vids = cplx.boundary_vertices()
    ventries = _run_batch(
        lambda w: analyze_vertex_3d(cplx, w, direction, policy, threshold), vids, nworkers
    )

    emap = EpsilonMap(direction=direction, threshold=threshold)
    emap.vertices = dict(zip(vids, ventries))
    emap.edges = {e: edge_entries[e] for e in sorted(edge_entries)}
    emap.triangles = {f: face_entries[f] for f in sorted(face_entries)}
    _inherit_lineage_entries(cplx, emap)
    emap.diagnostics = diagnostics
    return emap


def _inherit_lineage_entries(cplx: ConstrainedComplex3, emap: EpsilonMap) -> None:
    """Give live faces and edges their nearest analysed ancestor's entry."""
    parent_face = {kid: p for p, kids in cplx.con_children.items() for kid in kids}
    for fid in cplx.live_constrained():
        if fid in emap.triangles:
            continue
        node = fid
        while node not in emap.triangles and node in parent_face:
            node = parent_face[node]
        if node in emap.triangles:
            emap.triangles[fid] = emap.triangles[node].copy()
    emap.triangles = {f: emap.triangles[f] for f in sorted(emap.triangles) if f in cplx.con_faces}

    parent_edge = {kid: p for p, kids in cplx.edge_children.items() for kid in kids}
    live_edges = set(cplx.live_surface_edge_ids())
    for eid in sorted(live_edges):
        if eid in emap.edges:
            continue
        node = eid
        while node not in emap.edges and node in parent_edge:
            node = parent_edge[node]
        if node in emap.edges:
            emap.edges[eid] = emap.edges[node].copy()
    emap.edges = {e: emap.edges[e] for e in sorted(emap.edges) if e in live_edges}


def compute_map_3d(
    cplx: ConstrainedComplex3,
    direction: Direction,
    policy: TolerancePolicy | None = None,
    threshold: float | None = None,
    workers: int | None = None,
) -> EpsilonMap:
    """Compute the thickness map of every surface element.

    Face and edge analyses may split the complex in place, so it is
    refined by this call.  With a threshold only values strictly below
    it are resolved; everything else reports ThickBeyond.
    """
    if policy is None:
        policy = default_policy_3d(cplx)
    if direction != Direction.BIDIRECTIONAL:
        return _directional_map_3d(cplx, direction, policy, threshold, workers)

    pos = _directional_map_3d(cplx, Direction.POSITIVE, policy, threshold, workers)
    neg = _directional_map_3d(cplx, Direction.NEGATIVE, policy, threshold, workers)
    for vid in cplx.boundary_vertices():
        if vid not in pos.vertices:
            pos.vertices[vid] = analyze_vertex_3d(cplx, vid, Direction.POSITIVE, policy, threshold)
    _inherit_lineage_entries(cplx, pos)

    combined = EpsilonMap(direction=Direction.BIDIRECTIONAL, threshold=threshold)
    combined.positive = pos
    combined.negative = neg
    for vid in cplx.boundary_vertices():
        p, n = pos.vertices[vid], neg.vertices[vid]
        combined.vertices[vid] = (p if p.value <= n.value else n).copy()
    for eid in cplx.live_surface_edge_ids():
        p, n = pos.edges[eid], neg.edges[eid]
        combined.edges[eid] = (p if p.value <= n.value else n).copy()
    for fid in cplx.live_constrained():
        p, n = pos.triangles[fid], neg.triangles[fid]
        combined.triangles[fid] = (p if p.value <= n.value else n).copy()
    combined.diagnostics = pos.diagnostics + neg.diagnostics
    return combined
