"""Independent thickness oracle and map validation.

The oracle reasons about the exact polygon boundary instead of growing
regions over a triangulation.  For a boundary point it enumerates every
radius at which the covered part of the boundary can change character
(distances to vertices and to interior perpendicular feet), and for
each radius checks whether the boundary restricted to the closed disk
is still a single open run through the point.  A second covered
component, or a fully covered ring, breaks neutrality only when the
matching side passes the contact, which is decided by parity probes
just off the contact point.

Nothing here is shared with the map engine beyond primitive geometry,
so agreement between the two is meaningful evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex2d import ConstrainedComplex2, Polygon2, point_in_ring
from .geom import (
    AtVertex,
    TolerancePolicy,
    closest_point_on_segment,
    is_acute_angle,
    orient2d,
)
from .values import Direction, EpsilonMap, EpsilonValue, ValueKind

__all__ = ["oracle_thickness_2d", "oracle_compare", "OracleReport", "OracleRecord"]

# Probe offset as a fraction of the candidate radius.
_PROBE_FRACTION = 1e-6


# ----------------------------------------------------------------------
# boundary coverage


@dataclass
class _Piece:
    ring: int
    edge: int
    lo: float
    hi: float


@dataclass
class _Component:
    pieces: list[_Piece]
    is_loop: bool = False


def _cover_interval(a: np.ndarray, b: np.ndarray, x: np.ndarray, r: float) -> tuple[float, float] | None:
    w = b - a
    m = a - x
    ww = float(np.dot(w, w))
    if ww == 0.0:
        return None
    mw = float(np.dot(m, w))
    disc = mw * mw - ww * (float(np.dot(m, m)) - r * r)
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    lo = max(0.0, (-mw - root) / ww)
    hi = min(1.0, (-mw + root) / ww)
    if lo > hi:
        return None
    return lo, hi


def _covered_components(
    rings: list[np.ndarray], x: np.ndarray, r_eff: float
) -> list[_Component]:
    components: list[_Component] = []
    for ri, ring in enumerate(rings):
        n = len(ring)
        intervals = [
            _cover_interval(ring[i], ring[(i + 1) % n], x, r_eff) for i in range(n)
        ]
        vertex_in = [float(np.linalg.norm(ring[i] - x)) <= r_eff for i in range(n)]
        if all(vertex_in) and all(
            iv is not None and iv[0] == 0.0 and iv[1] == 1.0 for iv in intervals
        ):
            components.append(
                _Component([_Piece(ri, i, 0.0, 1.0) for i in range(n)], is_loop=True)
            )
            continue
        linked = [
            intervals[i] is not None
            and intervals[(i + 1) % n] is not None
            and vertex_in[(i + 1) % n]
            for i in range(n)
        ]
        seen = [False] * n
        for start in range(n):
            if seen[start] or intervals[start] is None:
                continue
            # Walk back to the run's first edge, then forward across it.
            first = start
            while linked[(first - 1) % n] and (first - 1) % n != start:
                first = (first - 1) % n
            pieces = []
            i = first
            while True:
                seen[i] = True
                lo, hi = intervals[i]
                pieces.append(_Piece(ri, i, lo, hi))
                if not linked[i]:
                    break
                i = (i + 1) % n
                if i == first:
                    break
            components.append(_Component(pieces))
    return components


def _component_closest(
    rings: list[np.ndarray], comp: _Component, x: np.ndarray
) -> tuple[np.ndarray, float]:
    best_p = None
    best_d = math.inf
    for piece in comp.pieces:
        ring = rings[piece.ring]
        a = ring[piece.edge]
        b = ring[(piece.edge + 1) % len(ring)]
        p0 = a + piece.lo * (b - a)
        p1 = a + piece.hi * (b - a)
        if piece.hi - piece.lo == 0.0:
            d, p = float(np.linalg.norm(p0 - x)), p0
        else:
            res = closest_point_on_segment(x, p0, p1)
            d, p = res.distance, res.point
        if d < best_d:
            best_d, best_p = d, p
    return best_p, best_d


# ----------------------------------------------------------------------
# parity probes


def _on_boundary(rings: list[np.ndarray], p: np.ndarray, tol: float) -> bool:
    for ring in rings:
        n = len(ring)
        for i in range(n):
            if closest_point_on_segment(p, ring[i], ring[(i + 1) % n]).distance <= tol:
                return True
    return False


def _is_material(polygon: Polygon2, p: np.ndarray) -> bool:
    return polygon.contains_point(p)


def _crossing(p, q, c, d) -> int:
    """1 when segments (p,q) and (c,d) cross properly, 0 when they
    clearly miss, -1 when a degenerate touch leaves it undecided."""
    o1 = orient2d(p, q, c)
    o2 = orient2d(p, q, d)
    if o1 * o2 > 0:
        return 0
    o3 = orient2d(c, d, p)
    o4 = orient2d(c, d, q)
    if o3 * o4 > 0:
        return 0
    if o1 * o2 < 0 and o3 * o4 < 0:
        return 1
    return -1


def _piece_segments(rings: list[np.ndarray], comps: list[_Component]):
    """Covered sub-segments grouped per component; each component's
    curve separates the disk on its own, so crossing parity is tracked
    per group."""
    groups = []
    for comp in comps:
        segs = []
        for piece in comp.pieces:
            if piece.hi <= piece.lo:
                continue
            ring = rings[piece.ring]
            a = ring[piece.edge]
            b = ring[(piece.edge + 1) % len(ring)]
            segs.append((a + piece.lo * (b - a), a + piece.hi * (b - a)))
        if segs:
            groups.append(segs)
    return groups


def _contact_passes(
    polygon: Polygon2,
    rings: list[np.ndarray],
    comps: list[_Component],
    x: np.ndarray,
    x_dir: np.ndarray,
    y: np.ndarray,
    r: float,
    want_material: bool,
    tol: float,
) -> bool:
    """Whether the matching side passes the contact at y.

    Two probe points are taken just off the boundary: one on the
    matching side of x, one on the x-facing side of y.  The contact
    passes when both probes have the matching class and lie in the same
    face of the disk cut by the covered boundary pieces, which holds
    exactly when the straight segment between them crosses the pieces
    an even number of times.
    """
    u = y - x
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        return False
    u = u / norm
    perp = np.array([-u[1], u[0]])
    groups = _piece_segments(rings, comps)
    wrong_side = 0
    for attempt in range(60):
        delta = _PROBE_FRACTION * r * 0.5 ** (attempt // 3)
        swing = (0.0, 0.5, -0.5)[attempt % 3]
        p = x + delta * x_dir
        q = y - delta * u + swing * delta * perp
        if _on_boundary(rings, p, tol) or _on_boundary(rings, q, tol):
            continue
        if _is_material(polygon, q) != want_material:
            wrong_side += 1
            # A straight-on probe deciding twice settles it; swung
            # probes may land across a grazing contact, so give the
            # other offsets a chance first.
            if wrong_side >= 6:
                return False
            continue
        if _is_material(polygon, p) != want_material:
            continue
        decided = True
        same_face = True
        for segs in groups:
            parity = 0
            for a, b in segs:
                cr = _crossing(p, q, a, b)
                if cr < 0:
                    decided = False
                    break
                parity ^= cr
            if not decided:
                break
            if parity:
                same_face = False
                break
        if not decided:
            continue
        return same_face
    return False


def _wedge_probe_dir(prev: np.ndarray, v: np.ndarray, nxt: np.ndarray, positive: bool) -> np.ndarray:
    turn = orient2d(prev, v, nxt)
    u1 = prev - v
    u2 = nxt - v
    n1 = float(np.linalg.norm(u1))
    n2 = float(np.linalg.norm(u2))
    b = u1 / n1 + u2 / n2
    if float(np.dot(b, b)) < 1e-24 or turn == 0:
        # Straight vertex: use the material-side normal of the outgoing edge.
        t = u2 / n2
        n = np.array([-t[1], t[0]])
        return n if positive else -n
    b = b / float(np.linalg.norm(b))
    into_material = b if turn > 0 else -b
    return into_material if positive else -into_material


# ----------------------------------------------------------------------
# the oracle


def _locate_on_boundary(
    rings: list[np.ndarray], x: np.ndarray, tol: float
) -> tuple[int, int, float]:
    best = None
    for ri, ring in enumerate(rings):
        n = len(ring)
        for i in range(n):
            res = closest_point_on_segment(x, ring[i], ring[(i + 1) % n])
            key = (res.distance, ri, i)
            if best is None or key < best[0]:
                if isinstance(res.location, AtVertex):
                    param = float(res.location.index)
                else:
                    param = res.location.param
                best = (key, ri, i, param)
    if best is None or best[0][0] > tol:
        raise ValueError("point is not on the polygon boundary")
    return best[1], best[2], best[3]


def _vertex_index_at(ring: np.ndarray, i: int, t: float, tol: float, x: np.ndarray) -> int | None:
    n = len(ring)
    if float(np.linalg.norm(ring[i] - x)) <= tol:
        return i
    if float(np.linalg.norm(ring[(i + 1) % n] - x)) <= tol:
        return (i + 1) % n
    return None


def oracle_thickness_2d(
    polygon: Polygon2,
    point,
    direction: Direction,
    policy: TolerancePolicy | None = None,
) -> EpsilonValue:
    """Thickness of the boundary at a single point, from first
    principles on the exact polygon.

    The point must lie on the boundary (within the absolute tolerance).
    """
    if policy is None:
        policy = TolerancePolicy.for_bbox_diagonal(polygon.bbox_diagonal())
    if direction == Direction.BIDIRECTIONAL:
        return min(
            oracle_thickness_2d(polygon, point, Direction.POSITIVE, policy),
            oracle_thickness_2d(polygon, point, Direction.NEGATIVE, policy),
        )
    x = np.asarray(point, dtype=float)
    rings = polygon.rings
    tol = 10.0 * policy.absolute_eps
    ri, ei, t = _locate_on_boundary(rings, x, tol)

    vi = _vertex_index_at(rings[ri], ei, t, tol, x)
    if vi is not None:
        ring = rings[ri]
        n = len(ring)
        prev_p, next_p = ring[(vi - 1) % n], ring[(vi + 1) % n]
        turn = orient2d(prev_p, ring[vi], next_p)
        if turn != 0 and is_acute_angle(prev_p - ring[vi], next_p - ring[vi], policy.tie_eps):
            sharp_dir = Direction.POSITIVE if turn > 0 else Direction.NEGATIVE
            if sharp_dir == direction:
                return EpsilonValue.zero()

    candidates: list[float] = []
    for ring in rings:
        n = len(ring)
        for i in range(n):
            candidates.append(float(np.linalg.norm(ring[i] - x)))
            a, b = ring[i], ring[(i + 1) % n]
            w = b - a
            ww = float(np.dot(w, w))
            s = float(np.dot(x - a, w)) / ww
            if 0.0 < s < 1.0:
                foot = a + s * w
                candidates.append(float(np.linalg.norm(foot - x)))
    floor = max(policy.absolute_eps, tol)
    radii = sorted({r for r in candidates if r > floor})

    want_material = direction == Direction.POSITIVE
    if vi is not None:
        ring = rings[ri]
        n = len(ring)
        x_dir = _wedge_probe_dir(
            ring[(vi - 1) % n], ring[vi], ring[(vi + 1) % n], want_material
        )
    else:
        ring = rings[ri]
        w = ring[(ei + 1) % len(ring)] - ring[ei]
        w = w / float(np.linalg.norm(w))
        nrm = np.array([-w[1], w[0]])
        x_dir = nrm if want_material else -nrm

    for r in radii:
        r_eff = r * (1.0 + policy.tie_eps) + policy.absolute_eps
        comps = _covered_components(rings, x, r_eff)
        home = None
        for comp in comps:
            for piece in comp.pieces:
                if piece.ring == ri and piece.edge == ei and piece.lo <= t <= piece.hi:
                    home = comp
                    break
            if home is not None:
                break
        if home is None:
            raise AssertionError("home component not found")
        if home.is_loop:
            for attempt in range(40):
                probe = x + (_PROBE_FRACTION * r * 0.5**attempt) * x_dir
                if not _on_boundary(rings, probe, tol):
                    break
            if point_in_ring(probe, rings[ri]):
                return EpsilonValue.finite(r)
        for comp in comps:
            if comp is home:
                continue
            y, _ = _component_closest(rings, comp, x)
            if _contact_passes(polygon, rings, comps, x, x_dir, y, r, want_material, tol):
                return EpsilonValue.finite(r)
    return EpsilonValue.unbounded()


# ----------------------------------------------------------------------
# comparison report


@dataclass
class OracleRecord:
    vertex: int
    point: tuple[float, float]
    algorithm: EpsilonValue
    oracle: EpsilonValue
    abs_diff: float | None
    agrees: bool


@dataclass
class OracleReport:
    direction: Direction
    tolerance: float
    records: list[OracleRecord] = field(default_factory=list)
    max_abs_diff: float = 0.0
    passed: bool = True

    def mismatches(self) -> list[OracleRecord]:
        return [r for r in self.records if not r.agrees]


def polygon_from_complex(cplx: ConstrainedComplex2) -> Polygon2:
    """Rebuild the (possibly refined) boundary polygon from a complex."""
    remaining = set(cplx.boundary_vertices())
    rings = []
    while remaining:
        start = min(remaining)
        loop = [start]
        cur = cplx.ring_neighbors(start)[1][0]
        while cur != start:
            loop.append(cur)
            cur = cplx.ring_neighbors(cur)[1][0]
        remaining.difference_update(loop)
        rings.append([tuple(cplx.vertex_point(v)) for v in loop])
    return Polygon2.from_rings(rings)


def oracle_compare(
    cplx: ConstrainedComplex2,
    emap: EpsilonMap,
    direction: Direction,
    tolerance: float,
    sample: list[int] | None = None,
    policy: TolerancePolicy | None = None,
) -> OracleReport:
    """Check map vertex entries against the oracle.

    Finite entries must agree within the tolerance; other kinds must
    match exactly.  ThickBeyond entries are accepted whenever the
    oracle's complete value is at or beyond the map threshold.  An
    empty selection passes vacuously.
    """
    polygon = polygon_from_complex(cplx)
    if policy is None:
        policy = TolerancePolicy.for_bbox_diagonal(polygon.bbox_diagonal())
    vids = sorted(emap.vertices) if sample is None else list(sample)
    report = OracleReport(direction=direction, tolerance=tolerance)
    for vid in vids:
        entry = emap.vertices[vid]
        p = cplx.vertex_point(vid)
        truth = oracle_thickness_2d(polygon, p, direction, policy)
        diff: float | None = None
        if entry.value.kind == ValueKind.FINITE and truth.kind == ValueKind.FINITE:
            diff = abs(entry.value.radius - truth.radius)
            agrees = diff <= tolerance
        elif entry.value.kind == ValueKind.THICK_BEYOND:
            threshold = emap.threshold if emap.threshold is not None else entry.value.radius
            agrees = truth.kind == ValueKind.UNBOUNDED or (
                truth.kind == ValueKind.FINITE and truth.radius >= threshold - tolerance
            )
        else:
            agrees = entry.value.kind == truth.kind
            if agrees and entry.value.kind == ValueKind.FINITE:
                diff = abs(entry.value.radius - truth.radius)
                agrees = diff <= tolerance
        report.records.append(
            OracleRecord(
                vertex=vid,
                point=(float(p[0]), float(p[1])),
                algorithm=entry.value,
                oracle=truth,
                abs_diff=diff,
                agrees=agrees,
            )
        )
        if diff is not None:
            report.max_abs_diff = max(report.max_abs_diff, diff)
        if not agrees:
            report.passed = False
    return report
