"""Directional thickness maps on 2D constrained complexes.

Every boundary element is analysed by growing a neutral disk: a region
of matching-class triangles flooded outward from the anchor in order of
arrival, the radius at which the front first enters each cell.  Arrival
is the minimax distance along the cell path (the largest facet minimum
crossed); within a convex cell the front reaches a facet exactly at the
later of the cell's own arrival and the facet's closest approach, so
the flood is the exact reachable set at every radius.  Free facets let
the region grow; constrained facets and boundary vertices produce
contact events.  A contact that arrives later than its straight-line
distance was reached by sliding along covered boundary and only merges
the front; an on-time contact breaks neutrality when the disk either
passes the boundary (reaches matching material on the far side) or
closes a loop around it.  The first breaking contact is the element's
thickness and is recorded as its antipodean event.

Edge analyses move the disk centre along the edge (distances are
measured from the whole segment), split the edge where the minimum is
attained in its interior, and leave endpoint values to the vertex
phase, which recomputes every boundary vertex with its own exclusions.
"""

from __future__ import annotations

import heapq
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .complex2d import ConstrainedComplex2, point_in_ring
from .geom import (
    AtVertex,
    OnEdgeInterior,
    TolerancePolicy,
    closest_point_on_element,
    closest_point_on_segment,
    closest_pair_segment_element,
    is_acute_angle,
    orient2d,
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
    "acute_zero_directions",
    "analyze_vertex_2d",
    "compute_map_2d",
    "default_policy_2d",
]

# Edge analyses refine at most this many times per original edge.
MAX_SPLIT_DEPTH = 12

# Relative slack for recognising a flat stretch of the distance
# function, well below the tie tolerance so tangential endpoint minima
# are not mistaken for ties.
_FLAT_REL = 1e-12


def default_policy_2d(cplx: ConstrainedComplex2) -> TolerancePolicy:
    return TolerancePolicy.for_bbox_diagonal(cplx.bbox_diagonal())


# ----------------------------------------------------------------------
# anchors


@dataclass
class _PointAnchor:
    vid: int
    point: np.ndarray
    excluded_vertices: frozenset[int] = frozenset()
    excluded_edges: frozenset[int] = frozenset()
    is_edge = False

    @classmethod
    def at(cls, cplx: ConstrainedComplex2, vid: int) -> "_PointAnchor":
        return cls(
            vid=vid,
            point=cplx.vertex_point(vid),
            excluded_vertices=frozenset([vid]),
            excluded_edges=frozenset(cplx.constrained_at_vertex(vid)),
        )

    def point_distance(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        return float(np.linalg.norm(q - self.point)), self.point

    def element_event(self, pts: np.ndarray):
        r = closest_point_on_element(self.point, pts)
        return r.distance, r.point, r.location, self.point, 0.0

    def initial_cells(self, cplx: ConstrainedComplex2, cls: CellClass) -> list[int]:
        sectors = cplx.sectors_at_vertex(self.vid, cls)
        if len(sectors) != 1:
            raise ValueError(
                f"vertex {self.vid} has {len(sectors)} {cls.value} sectors; boundary must be manifold"
            )
        return sorted(sectors[0])


@dataclass
class _EdgeAnchor:
    eid: int
    a: np.ndarray
    b: np.ndarray
    excluded_vertices: frozenset[int] = frozenset()
    excluded_edges: frozenset[int] = frozenset()
    is_edge = True

    @classmethod
    def at(cls, cplx: ConstrainedComplex2, eid: int) -> "_EdgeAnchor":
        u, v = cplx.con_edges[eid]
        excl_edges = set(cplx.constrained_at_vertex(u)) | set(cplx.constrained_at_vertex(v))
        return cls(
            eid=eid,
            a=cplx.vertex_point(u),
            b=cplx.vertex_point(v),
            excluded_vertices=frozenset([u, v]),
            excluded_edges=frozenset(excl_edges),
        )

    def point_distance(self, q: np.ndarray) -> tuple[float, np.ndarray]:
        r = closest_point_on_segment(q, self.a, self.b)
        return r.distance, r.point

    def element_event(self, pts: np.ndarray):
        pr = closest_pair_segment_element(self.a, self.b, pts)
        if isinstance(pr.anchor_location, AtVertex):
            t = float(pr.anchor_location.index)
        else:
            t = pr.anchor_location.param
        return pr.distance, pr.element_point, pr.element_location, pr.anchor_point, t

    def initial_cells(self, cplx: ConstrainedComplex2, cls: CellClass) -> list[int]:
        return [cplx.flank_cell(self.eid, cls)]


# ----------------------------------------------------------------------
# growth engine


@dataclass
class GrowOutcome:
    kind: str  # break | capped | exhausted
    distance: float = 0.0
    event: AntipodeanEvent | None = None
    host_kind: str = ""
    host_id: int = -1
    anchor_point: np.ndarray | None = None
    anchor_param: float = 0.0
    touched_pad: bool = False
    notes: list[str] = field(default_factory=list)


def _grow_region_2d(
    cplx: ConstrainedComplex2,
    anchor,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None = None,
) -> GrowOutcome:
    cls = matching_class(direction)
    arrival: dict[int, float] = {}
    heap: list[tuple[float, int, int, int, float]] = []
    best_v: dict[int, float] = {}
    popped_v: set[int] = set()
    best_ce: dict[int, float] = {}
    popped_ce: set[int] = set()
    best_free: dict[tuple[int, int], float] = {}
    notes: list[str] = []
    touched_pad = False
    inf = float("inf")

    def push_vertex(vid: int, t: float) -> None:
        if vid in popped_v:
            return
        d, _ = anchor.point_distance(cplx.vertex_point(vid))
        key = max(t, d)
        if key >= best_v.get(vid, inf):
            return
        best_v[vid] = key
        heapq.heappush(heap, (key, 2, vid, 0, d))

    def interior_foot(pts: np.ndarray) -> tuple[float, bool]:
        """Distance to the element and whether the nearest approach
        includes a point in the element's interior.

        With positive clearance an interior contact needs either an
        anchor endpoint whose perpendicular foot lands inside the
        element at the minimal distance, or a parallel stretch at that
        distance; the canonical closest pair alone can hide both behind
        an endpoint representative.
        """
        d, _, loc, _, _ = anchor.element_event(pts)
        if isinstance(loc, OnEdgeInterior):
            return d, True
        if not anchor.is_edge:
            return d, False
        near = d * (1.0 + _FLAT_REL) + policy.absolute_eps
        for corner in (anchor.a, anchor.b):
            r = closest_point_on_element(corner, pts)
            if isinstance(r.location, OnEdgeInterior) and r.distance <= near:
                return d, True
        e0, e1 = pts[0], pts[1]
        ev = e1 - e0
        denom = float(np.dot(ev, ev))
        snap = policy.absolute_eps / float(np.sqrt(denom))
        s_a = float(np.dot(anchor.a - e0, ev)) / denom
        s_b = float(np.dot(anchor.b - e0, ev)) / denom
        lo = max(min(s_a, s_b), snap)
        hi = min(max(s_a, s_b), 1.0 - snap)
        if hi - lo <= 2.0 * snap:
            return d, False
        q = e0 + 0.5 * (lo + hi) * ev
        dd = closest_point_on_segment(q, anchor.a, anchor.b).distance
        return d, dd <= near

    def push_ce(eid: int, t: float) -> None:
        if eid in anchor.excluded_edges or eid in popped_ce:
            return
        d, interior = interior_foot(cplx.edge_points(eid))
        if not interior:
            return
        key = max(t, d)
        if key >= best_ce.get(eid, inf):
            return
        best_ce[eid] = key
        heapq.heappush(heap, (key, 1, eid, 0, d))

    def push_free(u: int, v: int, t: float) -> None:
        pair = (u, v) if u < v else (v, u)
        d, _, _, _, _ = anchor.element_event(
            np.stack([cplx.vertex_point(u), cplx.vertex_point(v)])
        )
        key = max(t, d)
        if key >= best_free.get(pair, inf):
            return
        best_free[pair] = key
        heapq.heappush(heap, (key, 0, pair[0], pair[1], d))

    def add_cell(tid: int, t: float) -> None:
        nonlocal touched_pad
        if tid in arrival:
            return
        arrival[tid] = t
        a, b, c = cplx.tri_verts[tid]
        for u, v in ((a, b), (b, c), (c, a)):
            push_vertex(u, t)
            push_vertex(v, t)
            others = cplx.cells_of_pair(u, v)
            other = next((o for o in others if o != tid), None)
            if other is None:
                touched_pad = True
                continue
            eid = cplx.constrained_id(u, v)
            if eid is not None:
                push_ce(eid, t)
            elif other not in arrival:
                push_free(u, v, t)

    def grow_at_vertex(vid: int, t: float) -> None:
        for sector in cplx.sectors_at_vertex(vid, cls):
            if sector & arrival.keys():
                for tid in sorted(sector - arrival.keys()):
                    add_cell(tid, t)

    def edge_min_dist(eid: int, center: np.ndarray) -> float:
        pts = cplx.edge_points(eid)
        return closest_point_on_segment(center, pts[0], pts[1]).distance

    def ring_encloses_region(y_vid: int) -> bool:
        """Whether the boundary ring through y separates the grown
        region from the far side of the contact.

        A both-internal contact at y means the whole ring through y is
        inside the disk.  That pinches the region only when the region
        lies on the enclosed side of the ring; a region wrapping the
        ring from outside (a convex shape seen from its complement)
        stays neutral.
        """
        ring_pts = [cplx.vertex_point(y_vid)]
        cur = cplx.ring_neighbors(y_vid)[1][0]
        while cur != y_vid:
            ring_pts.append(cplx.vertex_point(cur))
            cur = cplx.ring_neighbors(cur)[1][0]
        probe = cplx.tri_points(seed_tid).mean(axis=0)
        return point_in_ring(probe, np.stack(ring_pts))

    def covered_connected(e1: int, e2: int, avoid_vid: int, center: np.ndarray, r: float) -> bool:
        """Can the covered part of the boundary link e1 to e2 without
        passing through the contact vertex itself?"""
        slack = r + max(policy.absolute_eps, policy.tie_eps * r)
        seen = {e1}
        stack = [e1]
        while stack:
            e = stack.pop()
            if e == e2:
                return True
            for w in cplx.con_edges[e]:
                if w == avoid_vid:
                    continue
                if float(np.linalg.norm(cplx.vertex_point(w) - center)) > slack:
                    continue
                for nxt in cplx.constrained_at_vertex(w):
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
        return False

    def facing_cells(y_vid: int, target: np.ndarray) -> list[int]:
        """Cells of the fan at y whose wedge contains the direction
        toward the witness; the two flanking cells when the direction
        runs along a free edge, none when it runs along a constrained
        one (the contact is then shielded by the boundary itself)."""
        py = cplx.vertex_point(y_vid)
        for tid in sorted(cplx.cells_at_vertex(y_vid)):
            verts = cplx.tri_verts[tid]
            i = verts.index(y_vid)
            va = verts[(i + 1) % 3]
            vb = verts[(i + 2) % 3]
            s1 = orient2d(py, cplx.vertex_point(va), target)
            s2 = orient2d(py, cplx.vertex_point(vb), target)
            if s1 > 0 and s2 < 0:
                return [tid]
        # On (or exactly opposite) some ray from y.
        for tid in sorted(cplx.cells_at_vertex(y_vid)):
            verts = cplx.tri_verts[tid]
            i = verts.index(y_vid)
            for w in (verts[(i + 1) % 3], verts[(i + 2) % 3]):
                pw = cplx.vertex_point(w)
                if orient2d(py, pw, target) == 0 and float(np.dot(target - py, pw - py)) > 0:
                    if cplx.constrained_id(y_vid, w) is not None:
                        return []
                    return sorted(cplx.cells_of_pair(y_vid, w))
        return []

    def contact_is_home(start: list[int], witness: np.ndarray, radius: float) -> bool:
        """Whether the contacted boundary piece is linked, through
        vertices inside the witness ball, to the boundary the anchor
        lives on.  A linked contact is the front sliding onto its own
        covered run, which merges; an unlinked one is a fresh contact.
        """
        slack = radius * (1.0 + policy.tie_eps) + policy.absolute_eps
        seen = set(start)
        stack = list(start)
        while stack:
            e = stack.pop()
            if e in anchor.excluded_edges:
                return True
            for w in cplx.con_edges[e]:
                if float(np.linalg.norm(cplx.vertex_point(w) - witness)) > slack:
                    continue
                for nxt in cplx.constrained_at_vertex(w):
                    if nxt in seen or edge_min_dist(nxt, witness) > slack:
                        continue
                    seen.add(nxt)
                    stack.append(nxt)
        return False

    def ce_contact_is_home(eid: int, pts: np.ndarray, witness: np.ndarray, radius: float) -> bool:
        """Home linkage for an edge contact.  An edge anchor carries a
        whole band of disk centres tied at this distance; the contact
        merges only if every representative of the band sees it linked
        (the canonical witness can sit at a corner whose larger ball
        reaches linking vertices interior centres cannot)."""
        if not contact_is_home([eid], witness, radius):
            return False
        if not anchor.is_edge:
            return True
        limit = radius * (1.0 + policy.tie_eps) + policy.absolute_eps
        iv = segment_tie_interval(anchor.a, anchor.b, pts, limit)
        if iv is None:
            return True
        span = anchor.b - anchor.a
        for t_w in (0.5 * (iv[0] + iv[1]), iv[0], iv[1]):
            w = anchor.a + t_w * span
            # A band representative further out carries its own tangent
            # radius; reusing the canonical radius would leave its ball
            # a hair short of the contact it is supposed to contain.
            r_w = max(radius, closest_point_on_element(w, pts).distance)
            if not contact_is_home([eid], w, r_w):
                return False
        return True

    popped_v.update(anchor.excluded_vertices)
    initial = anchor.initial_cells(cplx, cls)
    seed_tid = initial[0]
    for tid in initial:
        add_cell(tid, 0.0)
    for vid in sorted(anchor.excluded_vertices):
        grow_at_vertex(vid, 0.0)

    last_d = 0.0
    monotone_warned = False

    while heap:
        key, rank, id1, id2, d = heapq.heappop(heap)
        if threshold is not None and key >= threshold:
            return GrowOutcome("capped", distance=key, touched_pad=touched_pad, notes=notes)
        if key < last_d - policy.absolute_eps and not monotone_warned:
            notes.append(f"event distance decreased ({key:.6g} after {last_d:.6g})")
            monotone_warned = True
        last_d = max(last_d, key)

        if rank == 0:  # free facet, grow across
            u, v = id1, id2
            if key > best_free.get((u, v), inf):
                continue
            cells = cplx.cells_of_pair(u, v)
            for tid in cells:
                if tid not in arrival and cplx.tri_class[tid] == cls:
                    if any(t in arrival for t in cells if t != tid):
                        add_cell(tid, key)
            continue

        if rank == 1:  # constrained edge, interior foot
            eid = id1
            if eid in popped_ce or key > best_ce.get(eid, inf):
                continue
            popped_ce.add(eid)
            if eid not in cplx.con_edges:
                continue
            pts = cplx.edge_points(eid)
            _, interior = interior_foot(pts)
            if not interior:
                continue
            d2, y, loc, center, t = anchor.element_event(pts)
            s = orient2d(pts[0], pts[1], center)
            if s == 0:
                continue
            flank = cplx.side_cell(eid, s)
            if flank is None or cplx.tri_class[flank] != cls:
                continue
            if ce_contact_is_home(eid, pts, center, key):
                continue
            kind = (
                AntipodeanKind.ORTHOGONAL_FOOT if anchor.is_edge else AntipodeanKind.EDGE_MIDDLE
            )
            event = AntipodeanEvent(
                kind=kind,
                contact=tuple(float(x) for x in y),
                center=tuple(float(x) for x in center),
                host_kind="edge",
                host_id=eid,
            )
            return GrowOutcome(
                "break",
                distance=key,
                event=event,
                host_kind="edge",
                host_id=eid,
                anchor_point=center,
                anchor_param=t,
                touched_pad=touched_pad,
                notes=notes,
            )

        # rank == 2: vertex event
        vid = id1
        if vid in popped_v or key > best_v.get(vid, inf):
            continue
        popped_v.add(vid)
        incident = sorted(cplx.constrained_at_vertex(vid))
        if not incident:
            grow_at_vertex(vid, key)
            continue
        _, center = anchor.point_distance(cplx.vertex_point(vid))
        internal = [
            e for e in incident if edge_min_dist(e, center) < key * (1.0 - policy.tie_eps)
        ]
        k = len(internal)
        broke = False
        kind = None
        if internal and contact_is_home(internal, center, key):
            # The front slid onto this vertex along its own covered
            # run; that can only break by pinching a fully covered
            # ring against the region.
            if (
                k == 2
                and covered_connected(internal[0], internal[1], vid, center, key)
                and ring_encloses_region(vid)
            ):
                broke = True
                kind = AntipodeanKind.VERTEX_BOTH_INTERNAL
        else:
            # Fresh contact with boundary not linked to the home run;
            # valid only if the front actually occupies the wedge the
            # witness direction points through.
            cells = facing_cells(vid, center)
            if any(cplx.tri_class[c] == cls and c in arrival for c in cells):
                broke = True
                kind = (
                    AntipodeanKind.VERTEX_BOTH_INTERNAL
                    if k == 2
                    else AntipodeanKind.VERTEX_BOTH_EXTERNAL
                )
        if broke:
            contact = cplx.vertex_point(vid)
            event = AntipodeanEvent(
                kind=kind,
                contact=tuple(float(x) for x in contact),
                center=tuple(float(x) for x in center),
                host_kind="vertex",
                host_id=vid,
            )
            _, xparam = _anchor_param(anchor, contact)
            return GrowOutcome(
                "break",
                distance=key,
                event=event,
                host_kind="vertex",
                host_id=vid,
                anchor_point=center,
                anchor_param=xparam,
                touched_pad=touched_pad,
                notes=notes,
            )
        grow_at_vertex(vid, key)

    return GrowOutcome("exhausted", touched_pad=touched_pad, notes=notes)


def _anchor_param(anchor, contact: tuple | np.ndarray) -> tuple[np.ndarray, float]:
    q = np.asarray(contact, dtype=float)
    if not anchor.is_edge:
        return anchor.point, 0.0
    r = closest_point_on_segment(q, anchor.a, anchor.b)
    if isinstance(r.location, AtVertex):
        return r.point, float(r.location.index)
    return r.point, r.location.param


def _outcome_value(outcome: GrowOutcome, threshold: float | None) -> EpsilonValue:
    if outcome.kind == "break":
        return EpsilonValue.finite(outcome.distance)
    if outcome.kind == "capped":
        return EpsilonValue.thick_beyond(threshold)
    if threshold is not None:
        return EpsilonValue.thick_beyond(threshold)
    return EpsilonValue.unbounded()


# ----------------------------------------------------------------------
# acute corners


def acute_zero_directions(cplx: ConstrainedComplex2, vid: int, policy: TolerancePolicy) -> set[Direction]:
    """Directions in which this boundary vertex is a sharp corner.

    A corner sharper than a right angle forces the thickness limit to
    zero on the side the wedge narrows: the material side at convex
    corners, the complement side at reflex ones.  Flat (collinear)
    vertices are never sharp.
    """
    (prev_vid, _), (next_vid, _) = cplx.ring_neighbors(vid)
    pv = cplx.vertex_point(vid)
    u = cplx.vertex_point(prev_vid) - pv
    w = cplx.vertex_point(next_vid) - pv
    turn = orient2d(cplx.vertex_point(prev_vid), pv, cplx.vertex_point(next_vid))
    out: set[Direction] = set()
    if turn != 0 and is_acute_angle(u, w, policy.tie_eps):
        out.add(Direction.POSITIVE if turn > 0 else Direction.NEGATIVE)
    return out


# ----------------------------------------------------------------------
# per-element analyses


def analyze_vertex_2d(
    cplx: ConstrainedComplex2,
    vid: int,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None = None,
) -> MapEntry:
    if direction in acute_zero_directions(cplx, vid, policy):
        return MapEntry(EpsilonValue.zero(), source="acute_zero")
    outcome = _grow_region_2d(cplx, _PointAnchor.at(cplx, vid), direction, policy, threshold)
    return MapEntry(_outcome_value(outcome, threshold), event=outcome.event, source="vertex_analysis")


@dataclass
class _EdgeResult:
    eid: int
    kind: str  # entry | split
    entry: MapEntry | None = None
    split_t: float = 0.0
    distance: float = 0.0


def _analyze_edge(
    cplx: ConstrainedComplex2,
    eid: int,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None,
    provisional: dict[int, float],
) -> _EdgeResult:
    u, v = cplx.con_edges[eid]
    for endpoint in (u, v):
        if direction in acute_zero_directions(cplx, endpoint, policy):
            return _EdgeResult(eid, "entry", MapEntry(EpsilonValue.zero(), source="acute_zero"))

    anchor = _EdgeAnchor.at(cplx, eid)
    outcome = _grow_region_2d(cplx, anchor, direction, policy, threshold)
    if outcome.kind != "break":
        return _EdgeResult(
            eid, "entry", MapEntry(_outcome_value(outcome, threshold), source="edge_analysis")
        )

    d = outcome.distance
    length = float(np.linalg.norm(anchor.b - anchor.a))
    snap = policy.absolute_eps / length

    host_pts = (
        cplx.vertex_point(outcome.host_id)[None, :]
        if outcome.host_kind == "vertex"
        else cplx.edge_points(outcome.host_id)
    )
    limit = d * (1.0 + policy.tie_eps) + policy.absolute_eps
    iv_tie = segment_tie_interval(anchor.a, anchor.b, host_pts, limit)
    iv_flat = segment_tie_interval(
        anchor.a, anchor.b, host_pts, d * (1.0 + _FLAT_REL) + 0.1 * policy.absolute_eps
    )
    w_tie = iv_tie[1] - iv_tie[0] if iv_tie else 0.0
    w_flat = iv_flat[1] - iv_flat[0] if iv_flat else 0.0
    # A genuinely flat minimum keeps its width as the slack shrinks; a
    # tangential one collapses with it.
    is_flat = w_tie * length > 2.0 * policy.absolute_eps and w_flat > 0.5 * w_tie

    def entry_for_center(center: np.ndarray) -> MapEntry:
        r = closest_point_on_element(center, host_pts)
        event = AntipodeanEvent(
            kind=outcome.event.kind,
            contact=tuple(float(x) for x in r.point),
            center=tuple(float(x) for x in center),
            host_kind=outcome.host_kind,
            host_id=outcome.host_id,
        )
        return MapEntry(EpsilonValue.finite(d), event=event, source="edge_analysis")

    if is_flat:
        # Flat minimum: stop if a tied value is already pinned at a
        # corner inside the tie region, otherwise split at its middle.
        for vid_c in (u, v):
            known = provisional.get(vid_c)
            if known is None:
                continue
            if abs(known - d) > policy.tie_eps * max(known, d) + policy.absolute_eps:
                continue
            corner = cplx.vertex_point(vid_c)
            if closest_point_on_element(corner, host_pts).distance <= limit:
                return _EdgeResult(eid, "entry", entry_for_center(corner))
        t_split = 0.5 * (iv_flat[0] + iv_flat[1])
    else:
        t_split = outcome.anchor_param

    if t_split <= snap or t_split >= 1.0 - snap:
        center = anchor.a if t_split <= snap else anchor.b
        return _EdgeResult(eid, "entry", entry_for_center(center))
    return _EdgeResult(eid, "split", split_t=t_split, distance=d)


# ----------------------------------------------------------------------
# pipeline


def _parallel(workers: int | None):
    if workers is None:
        workers = os.cpu_count() or 1
    return max(1, int(workers))


def _directional_map(
    cplx: ConstrainedComplex2,
    direction: Direction,
    policy: TolerancePolicy,
    threshold: float | None,
    workers: int | None,
) -> EpsilonMap:
    nworkers = _parallel(workers)
    diagnostics: list[str] = []
    provisional: dict[int, float] = {}
    edge_entries: dict[int, MapEntry] = {}
    queue = cplx.live_constrained()
    depth = {eid: 0 for eid in queue}

    while queue:
        if nworkers > 1 and len(queue) > 1:
            with ThreadPoolExecutor(max_workers=nworkers) as ex:
                results = list(
                    ex.map(
                        lambda e: _analyze_edge(cplx, e, direction, policy, threshold, provisional),
                        queue,
                    )
                )
        else:
            results = [
                _analyze_edge(cplx, e, direction, policy, threshold, provisional) for e in queue
            ]
        next_queue: list[int] = []
        for res in sorted(results, key=lambda r: r.eid):
            if res.kind == "split":
                if depth[res.eid] >= MAX_SPLIT_DEPTH:
                    diagnostics.append(
                        f"edge {res.eid}: split depth cap reached, keeping minimum {res.distance:.6g}"
                    )
                    edge_entries[res.eid] = MapEntry(
                        EpsilonValue.finite(res.distance), source="edge_analysis"
                    )
                    continue
                mid, (c1, c2) = cplx.split_constrained_edge(res.eid, res.split_t)
                provisional[mid] = res.distance
                depth[c1] = depth[c2] = depth[res.eid] + 1
                next_queue.extend((c1, c2))
            else:
                edge_entries[res.eid] = res.entry
        queue = sorted(next_queue)

    vids = cplx.boundary_vertices()
    if nworkers > 1 and len(vids) > 1:
        with ThreadPoolExecutor(max_workers=nworkers) as ex:
            ventries = list(
                ex.map(lambda v: analyze_vertex_2d(cplx, v, direction, policy, threshold), vids)
            )
    else:
        ventries = [analyze_vertex_2d(cplx, v, direction, policy, threshold) for v in vids]

    emap = EpsilonMap(direction=direction, threshold=threshold)
    emap.vertices = dict(zip(vids, ventries))
    emap.edges = {eid: edge_entries[eid] for eid in sorted(edge_entries) if eid in cplx.con_edges}
    emap.diagnostics = diagnostics
    return emap


def _inherit_edge_entries(cplx: ConstrainedComplex2, emap: EpsilonMap) -> None:
    """After later splits, give children their ancestor's edge entry."""
    parent_of = {kid: p for p, kids in cplx.con_children.items() for kid in kids}
    for eid in cplx.live_constrained():
        if eid in emap.edges:
            continue
        node = eid
        while node not in emap.edges and node in parent_of:
            node = parent_of[node]
        if node in emap.edges:
            emap.edges[eid] = emap.edges[node].copy()


def compute_map_2d(
    cplx: ConstrainedComplex2,
    direction: Direction,
    policy: TolerancePolicy | None = None,
    threshold: float | None = None,
    workers: int | None = None,
) -> EpsilonMap:
    """Compute the thickness map of every boundary element.

    Edge analyses may split constrained edges in place, so the complex
    is refined by this call.  With a threshold only values strictly
    below it are resolved; everything else reports ThickBeyond.
    """
    if policy is None:
        policy = default_policy_2d(cplx)
    if direction != Direction.BIDIRECTIONAL:
        return _directional_map(cplx, direction, policy, threshold, workers)

    pos = _directional_map(cplx, Direction.POSITIVE, policy, threshold, workers)
    neg = _directional_map(cplx, Direction.NEGATIVE, policy, threshold, workers)
    # The negative pass may have refined the complex further: fill in
    # positive values for vertices it created, and extend positive edge
    # entries to the children of edges it split.
    for vid in cplx.boundary_vertices():
        if vid not in pos.vertices:
            pos.vertices[vid] = analyze_vertex_2d(cplx, vid, Direction.POSITIVE, policy, threshold)
    _inherit_edge_entries(cplx, pos)

    combined = EpsilonMap(direction=Direction.BIDIRECTIONAL, threshold=threshold)
    combined.positive = pos
    combined.negative = neg
    for vid in cplx.boundary_vertices():
        p, n = pos.vertices[vid], neg.vertices[vid]
        combined.vertices[vid] = (p if p.value <= n.value else n).copy()
    for eid in cplx.live_constrained():
        p, n = pos.edges[eid], neg.edges[eid]
        combined.edges[eid] = (p if p.value <= n.value else n).copy()
    combined.diagnostics = pos.diagnostics + neg.diagnostics
    return combined
