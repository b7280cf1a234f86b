"""Exact-decision geometric predicates and closest-point primitives.

Orientation tests run a floating-point filter first and fall back to
exact rational arithmetic (in the style of Shewchuk's robust
predicates), so sign decisions are never corrupted by roundoff.
Distances, feet, and parameters are ordinary floating point; callers
that need to compare nearly-equal distances do so through a
TolerancePolicy.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from fractions import Fraction

import numpy as np

__all__ = [
    "TolerancePolicy",
    "ElementKind",
    "AtVertex",
    "OnEdgeInterior",
    "OnTriangleInterior",
    "ClosestPointResult",
    "ClosestPairResult",
    "EventKey",
    "tie_break",
    "orient2d",
    "orient3d",
    "closest_point_on_segment",
    "closest_point_on_triangle",
    "closest_point_on_element",
    "point_element_distance",
    "closest_pair_segment_element",
    "closest_pair_triangle_element",
    "segment_tie_interval",
    "is_acute_angle",
    "segments_intersect",
    "point_on_segment_2d",
    "polygon_signed_area",
    "polygon_area_sign",
    "clip_convex_polygon_2d",
    "polygon_centroid_2d",
]

# Half-ulp of a double and the derived one-shot filter bounds.
_EPS = 1.1102230246251565e-16
_CCW_ERRBOUND = (3.0 + 16.0 * _EPS) * _EPS
_O3D_ERRBOUND = (7.0 + 56.0 * _EPS) * _EPS


@dataclass(frozen=True)
class TolerancePolicy:
    """Shared tolerances for distance comparisons and tie detection.

    absolute_eps is an absolute length (callers usually derive it from
    the input bounding box), relative_eps guards ratios of comparable
    distances, tie_eps decides when two event distances count as equal.
    """

    absolute_eps: float
    relative_eps: float = 1e-9
    tie_eps: float = 1e-9

    def __post_init__(self) -> None:
        if not self.absolute_eps > 0.0:
            raise ValueError("absolute_eps must be positive")
        if not self.relative_eps > 0.0:
            raise ValueError("relative_eps must be positive")
        if not self.tie_eps > 0.0:
            raise ValueError("tie_eps must be positive")
        if self.tie_eps > self.relative_eps:
            raise ValueError("tie_eps must not exceed relative_eps")

    @classmethod
    def for_bbox_diagonal(
        cls,
        diagonal: float,
        absolute_eps: float | None = None,
        relative_eps: float = 1e-9,
        tie_eps: float = 1e-9,
    ) -> "TolerancePolicy":
        """Policy scaled to a model whose bounding box diagonal is given."""
        if absolute_eps is None:
            absolute_eps = 1e-12 * diagonal
        return cls(absolute_eps, relative_eps, tie_eps)

    def close(self, a: float, b: float) -> bool:
        """True when two distances are equal up to the tie tolerance."""
        scale = max(abs(a), abs(b))
        return abs(a - b) <= max(self.absolute_eps, self.tie_eps * scale)


class ElementKind(IntEnum):
    """Rank order used by tie_break: vertices beat edges beat triangles."""

    VERTEX = 0
    EDGE = 1
    TRIANGLE = 2


@dataclass(frozen=True)
class AtVertex:
    """Closest point coincides with a vertex of the queried element."""

    index: int


@dataclass(frozen=True)
class OnEdgeInterior:
    """Closest point lies strictly inside an edge, at the given parameter.

    For triangle queries ``index`` names the edge (vertex i to vertex
    i+1 mod 3); for bare segments it is 0.
    """

    param: float
    index: int = 0


@dataclass(frozen=True)
class OnTriangleInterior:
    """Closest point lies strictly inside a triangle (barycentric coords)."""

    bary: tuple[float, float, float]


Location = AtVertex | OnEdgeInterior | OnTriangleInterior


@dataclass(eq=False)
class ClosestPointResult:
    point: np.ndarray
    distance: float
    location: Location


@dataclass(eq=False)
class ClosestPairResult:
    """Closest pair between an anchor (segment or triangle) and an element.

    ``anchor_location`` is relative to the anchor, ``element_location``
    relative to the element.  When several anchor points realise the
    same distance the smallest anchor parameter wins, so results are
    deterministic.
    """

    distance: float
    anchor_point: np.ndarray
    anchor_location: Location
    element_point: np.ndarray
    element_location: Location


@dataclass(frozen=True)
class EventKey:
    """Deterministic ordering key for simultaneous events."""

    kind: ElementKind
    element_id: int
    param: float = 0.0

    def sort_key(self) -> tuple[int, int, float]:
        return (int(self.kind), self.element_id, self.param)


def tie_break(candidates: list[EventKey]) -> EventKey:
    """Pick the canonical winner among events at the same distance.

    Vertices beat edges beat triangles; ties continue through element id
    and parameter.  The choice depends only on the set of candidates,
    not on their order.
    """
    if not candidates:
        raise ValueError("tie_break requires at least one candidate")
    return min(candidates, key=EventKey.sort_key)


def _sign(x) -> int:
    if x > 0:
        return 1
    if x < 0:
        return -1
    return 0


def orient2d(a, b, c) -> int:
    """Sign of the signed area of triangle (a, b, c).

    +1 when c lies to the left of the directed line a->b, -1 to the
    right, 0 when the points are exactly collinear.
    """
    acx = float(a[0]) - float(c[0])
    acy = float(a[1]) - float(c[1])
    bcx = float(b[0]) - float(c[0])
    bcy = float(b[1]) - float(c[1])
    detleft = acx * bcy
    detright = acy * bcx
    det = detleft - detright
    if detleft > 0.0:
        if detright <= 0.0:
            return _sign(det)
        detsum = detleft + detright
    elif detleft < 0.0:
        if detright >= 0.0:
            return _sign(det)
        detsum = -detleft - detright
    else:
        return _sign(det)
    errbound = _CCW_ERRBOUND * detsum
    if det >= errbound or -det >= errbound:
        return _sign(det)
    return _orient2d_exact(a, b, c)


def _orient2d_exact(a, b, c) -> int:
    ax, ay = Fraction(float(a[0])), Fraction(float(a[1]))
    bx, by = Fraction(float(b[0])), Fraction(float(b[1]))
    cx, cy = Fraction(float(c[0])), Fraction(float(c[1]))
    det = (ax - cx) * (by - cy) - (ay - cy) * (bx - cx)
    return (det > 0) - (det < 0)


def orient3d(a, b, c, d) -> int:
    """Sign of det[b-a; c-a; d-a].

    +1 when d lies on the positive side of the plane through a, b, c
    (the side the right-handed normal of (b-a) x (c-a) points into),
    -1 on the other side, 0 when the four points are exactly coplanar.
    """
    bax = float(b[0]) - float(a[0])
    bay = float(b[1]) - float(a[1])
    baz = float(b[2]) - float(a[2])
    cax = float(c[0]) - float(a[0])
    cay = float(c[1]) - float(a[1])
    caz = float(c[2]) - float(a[2])
    dax = float(d[0]) - float(a[0])
    day = float(d[1]) - float(a[1])
    daz = float(d[2]) - float(a[2])

    cx = bay * caz - baz * cay
    cy = baz * cax - bax * caz
    cz = bax * cay - bay * cax
    det = cx * dax + cy * day + cz * daz

    permanent = (
        (abs(bay * caz) + abs(baz * cay)) * abs(dax)
        + (abs(baz * cax) + abs(bax * caz)) * abs(day)
        + (abs(bax * cay) + abs(bay * cax)) * abs(daz)
    )
    errbound = _O3D_ERRBOUND * permanent
    if det > errbound or -det > errbound:
        return _sign(det)
    return _orient3d_exact(a, b, c, d)


def _orient3d_exact(a, b, c, d) -> int:
    av = [Fraction(float(x)) for x in a]
    bv = [Fraction(float(x)) for x in b]
    cv = [Fraction(float(x)) for x in c]
    dv = [Fraction(float(x)) for x in d]
    ba = [bv[i] - av[i] for i in range(3)]
    ca = [cv[i] - av[i] for i in range(3)]
    da = [dv[i] - av[i] for i in range(3)]
    det = (
        ba[0] * (ca[1] * da[2] - ca[2] * da[1])
        - ba[1] * (ca[0] * da[2] - ca[2] * da[0])
        + ba[2] * (ca[0] * da[1] - ca[1] * da[0])
    )
    return (det > 0) - (det < 0)


def closest_point_on_segment(p, a, b) -> ClosestPointResult:
    """Closest point of segment [a, b] to p, with vertex/interior tag."""
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ab = b - a
    denom = float(np.dot(ab, ab))
    if denom == 0.0:
        raise ValueError("degenerate segment: endpoints coincide")
    t = float(np.dot(p - a, ab)) / denom
    if t <= 0.0:
        q, loc = a, AtVertex(0)
    elif t >= 1.0:
        q, loc = b, AtVertex(1)
    else:
        q, loc = a + t * ab, OnEdgeInterior(param=t)
    return ClosestPointResult(point=q, distance=float(np.linalg.norm(p - q)), location=loc)


def closest_point_on_triangle(p, a, b, c) -> ClosestPointResult:
    """Closest point of triangle (a, b, c) to p, with region tag.

    Vertex and edge regions are decided by the standard barycentric
    region walk, so the tag is consistent with the returned point.
    Edge i runs from vertex i to vertex (i+1) mod 3.
    """
    p = np.asarray(p, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    c = np.asarray(c, dtype=float)

    ab = b - a
    ac = c - a
    cr = np.cross(ab, ac)
    if float(np.dot(cr, cr)) == 0.0:
        raise ValueError("degenerate triangle: zero area")

    ap = p - a
    d1 = float(np.dot(ab, ap))
    d2 = float(np.dot(ac, ap))
    if d1 <= 0.0 and d2 <= 0.0:
        return ClosestPointResult(a, float(np.linalg.norm(p - a)), AtVertex(0))

    bp = p - b
    d3 = float(np.dot(ab, bp))
    d4 = float(np.dot(ac, bp))
    if d3 >= 0.0 and d4 <= d3:
        return ClosestPointResult(b, float(np.linalg.norm(p - b)), AtVertex(1))

    cp = p - c
    d5 = float(np.dot(ab, cp))
    d6 = float(np.dot(ac, cp))
    if d6 >= 0.0 and d5 <= d6:
        return ClosestPointResult(c, float(np.linalg.norm(p - c)), AtVertex(2))

    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        v = d1 / (d1 - d3)
        q = a + v * ab
        return ClosestPointResult(q, float(np.linalg.norm(p - q)), OnEdgeInterior(param=v, index=0))

    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        q = a + w * ac
        # Point sits on edge (a, c); report it along edge 2 = (c, a).
        return ClosestPointResult(q, float(np.linalg.norm(p - q)), OnEdgeInterior(param=1.0 - w, index=2))

    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        q = b + w * (c - b)
        return ClosestPointResult(q, float(np.linalg.norm(p - q)), OnEdgeInterior(param=w, index=1))

    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    q = a + v * ab + w * ac
    bary = (1.0 - v - w, v, w)
    return ClosestPointResult(q, float(np.linalg.norm(p - q)), OnTriangleInterior(bary=bary))


def closest_point_on_element(p, element: np.ndarray) -> ClosestPointResult:
    """Dispatch on element shape: (1,d) point, (2,d) segment, (3,d) triangle."""
    element = np.asarray(element, dtype=float)
    n = element.shape[0]
    if n == 1:
        q = element[0]
        return ClosestPointResult(q, float(np.linalg.norm(np.asarray(p, float) - q)), AtVertex(0))
    if n == 2:
        return closest_point_on_segment(p, element[0], element[1])
    if n == 3:
        return closest_point_on_triangle(p, element[0], element[1], element[2])
    raise ValueError(f"element must have 1, 2, or 3 rows, got {n}")


def point_element_distance(p, element: np.ndarray) -> float:
    return closest_point_on_element(p, element).distance


def _segment_param_of(loc: Location) -> float:
    if isinstance(loc, AtVertex):
        return float(loc.index)
    if isinstance(loc, OnEdgeInterior):
        return loc.param
    raise TypeError(f"not a segment location: {loc!r}")


def _remap_triangle_edge_location(loc: Location, edge_index: int) -> Location:
    """Lift a location on triangle edge ``edge_index`` to the triangle."""
    if isinstance(loc, AtVertex):
        return AtVertex((edge_index + loc.index) % 3)
    if isinstance(loc, OnEdgeInterior):
        return OnEdgeInterior(param=loc.param, index=edge_index)
    raise TypeError(f"not a segment location: {loc!r}")


def closest_pair_segment_element(a, b, element: np.ndarray) -> ClosestPairResult:
    """Closest pair between anchor segment [a, b] and a point/segment/triangle.

    Among anchor points realising the minimum distance the smallest
    parameter is returned, so a segment facing a parallel element
    reports its first endpoint.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    element = np.asarray(element, dtype=float)
    n = element.shape[0]

    #  (distance, anchor param, anchor point, element point, element location)
    cands: list[tuple[float, float, np.ndarray, np.ndarray, Location]] = []

    if n == 1:
        r = closest_point_on_segment(element[0], a, b)
        cands.append((r.distance, _segment_param_of(r.location), r.point, element[0], AtVertex(0)))
    elif n == 2:
        c, d = element[0], element[1]
        for q, ei in ((c, 0), (d, 1)):
            r = closest_point_on_segment(q, a, b)
            cands.append((r.distance, _segment_param_of(r.location), r.point, q, AtVertex(ei)))
        for p, t in ((a, 0.0), (b, 1.0)):
            r = closest_point_on_segment(p, c, d)
            cands.append((r.distance, t, p, r.point, r.location))
        u = b - a
        v = d - c
        w0 = a - c
        aa = float(np.dot(u, u))
        bb = float(np.dot(u, v))
        cc = float(np.dot(v, v))
        dd = float(np.dot(u, w0))
        ee = float(np.dot(v, w0))
        denom = aa * cc - bb * bb
        if denom > 0.0:
            s = (bb * ee - cc * dd) / denom
            t2 = (aa * ee - bb * dd) / denom
            if 0.0 < s < 1.0 and 0.0 < t2 < 1.0:
                p = a + s * u
                q = c + t2 * v
                cands.append((float(np.linalg.norm(p - q)), s, p, q, OnEdgeInterior(param=t2)))
    elif n == 3:
        for p, t in ((a, 0.0), (b, 1.0)):
            r = closest_point_on_triangle(p, element[0], element[1], element[2])
            cands.append((r.distance, t, p, r.point, r.location))
        for ei in range(3):
            c = element[ei]
            d = element[(ei + 1) % 3]
            sub = closest_pair_segment_element(a, b, np.stack([c, d]))
            cands.append(
                (
                    sub.distance,
                    _segment_param_of(sub.anchor_location),
                    sub.anchor_point,
                    sub.element_point,
                    _remap_triangle_edge_location(sub.element_location, ei),
                )
            )
    else:
        raise ValueError(f"element must have 1, 2, or 3 rows, got {n}")

    dist, t, p, q, eloc = min(cands, key=lambda c: (c[0], c[1]))
    if t <= 0.0:
        aloc: Location = AtVertex(0)
    elif t >= 1.0:
        aloc = AtVertex(1)
    else:
        aloc = OnEdgeInterior(param=t)
    return ClosestPairResult(dist, p, aloc, q, eloc)


def closest_pair_triangle_element(tri: np.ndarray, element: np.ndarray) -> ClosestPairResult:
    """Closest pair between an anchor triangle and a point/segment/triangle.

    Deterministic but with no canonical choice among tied minimisers;
    callers that care about flat tie regions recover them separately.
    """
    tri = np.asarray(tri, dtype=float)
    element = np.asarray(element, dtype=float)
    n = element.shape[0]

    # (distance, anchor point, anchor location, element point, element location)
    cands: list[tuple[float, np.ndarray, Location, np.ndarray, Location]] = []

    if n == 1:
        r = closest_point_on_triangle(element[0], tri[0], tri[1], tri[2])
        cands.append((r.distance, r.point, r.location, element[0], AtVertex(0)))
    elif n == 2:
        sub = closest_pair_segment_element(element[0], element[1], tri)
        cands.append((sub.distance, sub.element_point, sub.element_location, sub.anchor_point, sub.anchor_location))
    elif n == 3:
        for vi in range(3):
            r = closest_point_on_triangle(element[vi], tri[0], tri[1], tri[2])
            cands.append((r.distance, r.point, r.location, element[vi], AtVertex(vi)))
        for vi in range(3):
            r = closest_point_on_triangle(tri[vi], element[0], element[1], element[2])
            cands.append((r.distance, tri[vi], AtVertex(vi), r.point, r.location))
        for ai in range(3):
            seg_a = tri[ai]
            seg_b = tri[(ai + 1) % 3]
            for ei in range(3):
                sub = closest_pair_segment_element(
                    seg_a, seg_b, np.stack([element[ei], element[(ei + 1) % 3]])
                )
                cands.append(
                    (
                        sub.distance,
                        sub.anchor_point,
                        _remap_triangle_edge_location(sub.anchor_location, ai),
                        sub.element_point,
                        _remap_triangle_edge_location(sub.element_location, ei),
                    )
                )
    else:
        raise ValueError(f"element must have 1, 2, or 3 rows, got {n}")

    best = None
    for c in cands:
        if best is None or c[0] < best[0]:
            best = c
    dist, p, aloc, q, eloc = best
    return ClosestPairResult(dist, p, aloc, q, eloc)


def segment_tie_interval(a, b, element: np.ndarray, limit: float, iters: int = 80) -> tuple[float, float] | None:
    """Parameter interval of [a, b] whose distance to element is <= limit.

    The distance along a segment to a convex element is convex, so the
    sublevel set is a single interval; its ends are found by bisection.
    Returns None when even the minimum exceeds the limit.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    element = np.asarray(element, dtype=float)

    def dist(t: float) -> float:
        return point_element_distance(a + t * (b - a), element)

    best = closest_pair_segment_element(a, b, element)
    t_star = _segment_param_of(best.anchor_location)
    if best.distance > limit:
        return None

    if dist(0.0) <= limit:
        t_lo = 0.0
    else:
        lo, hi = 0.0, t_star
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if dist(mid) <= limit:
                hi = mid
            else:
                lo = mid
        t_lo = hi

    if dist(1.0) <= limit:
        t_hi = 1.0
    else:
        lo, hi = t_star, 1.0
        for _ in range(iters):
            mid = 0.5 * (lo + hi)
            if dist(mid) <= limit:
                lo = mid
            else:
                hi = mid
        t_hi = lo

    return (t_lo, t_hi)


def is_acute_angle(u, v, tie_eps: float = 1e-9) -> bool:
    """True when the angle between direction vectors u and v is acute.

    A right angle is not acute: the normalised dot product must clear
    the tie tolerance.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ValueError("zero-length direction vector")
    return float(np.dot(u, v)) / (nu * nv) > tie_eps


def point_on_segment_2d(p, a, b) -> bool:
    """Exact test: p lies on the closed segment [a, b] (2D)."""
    if orient2d(a, b, p) != 0:
        return False
    return (
        min(a[0], b[0]) <= p[0] <= max(a[0], b[0])
        and min(a[1], b[1]) <= p[1] <= max(a[1], b[1])
    )


def segments_intersect(a, b, c, d) -> bool:
    """Exact test: closed segments [a, b] and [c, d] share any point (2D)."""
    o1 = orient2d(a, b, c)
    o2 = orient2d(a, b, d)
    o3 = orient2d(c, d, a)
    o4 = orient2d(c, d, b)
    if o1 != o2 and o3 != o4:
        return True
    if o1 == 0 and point_on_segment_2d(c, a, b):
        return True
    if o2 == 0 and point_on_segment_2d(d, a, b):
        return True
    if o3 == 0 and point_on_segment_2d(a, c, d):
        return True
    if o4 == 0 and point_on_segment_2d(b, c, d):
        return True
    return False


def polygon_signed_area(ring: np.ndarray) -> float:
    """Signed area of a closed 2D ring (positive for counterclockwise)."""
    ring = np.asarray(ring, dtype=float)
    x = ring[:, 0]
    y = ring[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def polygon_area_sign(ring: np.ndarray) -> int:
    """Exact sign of the signed area of a closed 2D ring."""
    total = Fraction(0)
    n = len(ring)
    for i in range(n):
        x0, y0 = ring[i]
        x1, y1 = ring[(i + 1) % n]
        total += Fraction(float(x0)) * Fraction(float(y1)) - Fraction(float(y0)) * Fraction(float(x1))
    return (total > 0) - (total < 0)


def clip_convex_polygon_2d(subject: np.ndarray, clip: np.ndarray) -> np.ndarray:
    """Intersection of two convex polygons (both counterclockwise, 2D).

    Sutherland-Hodgman clipping; returns an (m, 2) array that may be
    empty when the polygons do not overlap.
    """
    output = [np.asarray(p, dtype=float) for p in subject]
    clip = np.asarray(clip, dtype=float)
    n = len(clip)
    for i in range(n):
        if not output:
            break
        a = clip[i]
        b = clip[(i + 1) % n]
        incoming = output
        output = []
        prev = incoming[-1]
        prev_in = orient2d(a, b, prev) >= 0
        for cur in incoming:
            cur_in = orient2d(a, b, cur) >= 0
            if cur_in != prev_in:
                e = b - a
                w = prev - a
                dv = cur - prev
                denom = e[0] * dv[1] - e[1] * dv[0]
                if denom != 0.0:
                    t = (e[1] * w[0] - e[0] * w[1]) / denom
                    output.append(prev + t * dv)
            if cur_in:
                output.append(cur)
            prev = cur
            prev_in = cur_in
    if not output:
        return np.zeros((0, 2))
    return np.asarray(output)


def polygon_centroid_2d(poly: np.ndarray) -> np.ndarray:
    """Area centroid of a simple 2D polygon (vertex mean for degenerate ones)."""
    poly = np.asarray(poly, dtype=float)
    n = len(poly)
    if n == 0:
        raise ValueError("empty polygon")
    a2 = 0.0
    cx = 0.0
    cy = 0.0
    for i in range(n):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % n]
        cr = x0 * y1 - x1 * y0
        a2 += cr
        cx += (x0 + x1) * cr
        cy += (y0 + y1) * cr
    if abs(a2) < 1e-30:
        return poly.mean(axis=0)
    return np.array([cx / (3.0 * a2), cy / (3.0 * a2)])
