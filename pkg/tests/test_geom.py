"""Geometric primitive tests: pinned cases plus invariance properties."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from epsmap.geom import (
    AtVertex,
    ClosestPairResult,
    ElementKind,
    EventKey,
    OnEdgeInterior,
    OnTriangleInterior,
    TolerancePolicy,
    closest_pair_segment_element,
    closest_pair_triangle_element,
    closest_point_on_segment,
    closest_point_on_triangle,
    is_acute_angle,
    orient2d,
    orient3d,
    point_on_segment_2d,
    polygon_area_sign,
    polygon_signed_area,
    segment_tie_interval,
    segments_intersect,
    tie_break,
)

coords = st.floats(min_value=-100.0, max_value=100.0, allow_nan=False, allow_infinity=False)


def pt2(xs):
    return np.asarray(xs, dtype=float)


class TestTolerancePolicy:
    def test_defaults_scale_with_bbox(self):
        pol = TolerancePolicy.for_bbox_diagonal(10.0)
        assert pol.absolute_eps == pytest.approx(1e-11)
        assert pol.relative_eps == 1e-9
        assert pol.tie_eps == 1e-9

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            TolerancePolicy(absolute_eps=0.0)
        with pytest.raises(ValueError):
            TolerancePolicy(absolute_eps=1e-12, relative_eps=-1.0)
        with pytest.raises(ValueError):
            TolerancePolicy(absolute_eps=1e-12, tie_eps=0.0)

    def test_rejects_tie_above_relative(self):
        with pytest.raises(ValueError):
            TolerancePolicy(absolute_eps=1e-12, relative_eps=1e-9, tie_eps=1e-6)


class TestOrient2d:
    def test_counterclockwise(self):
        assert orient2d((0, 0), (1, 0), (0, 1)) == 1

    def test_collinear(self):
        assert orient2d((0, 0), (1, 1), (2, 2)) == 0

    def test_clockwise(self):
        assert orient2d((0, 0), (0, 1), (1, 0)) == -1

    def test_near_degenerate_is_exact(self):
        # Points nearly collinear: the filter must hand off to the
        # exact path and still produce a consistent sign.
        a = (0.0, 0.0)
        b = (1e-30, 1e-30)
        c = (2e-30, 2e-30)
        assert orient2d(a, b, c) == 0

    @given(coords, coords, coords, coords, coords, coords)
    @settings(max_examples=200, deadline=None)
    def test_antisymmetric_under_swaps(self, ax, ay, bx, by, cx, cy):
        a, b, c = (ax, ay), (bx, by), (cx, cy)
        s = orient2d(a, b, c)
        assert orient2d(b, a, c) == -s
        assert orient2d(a, c, b) == -s
        assert orient2d(c, b, a) == -s
        # Cyclic rotations preserve the sign.
        assert orient2d(b, c, a) == s
        assert orient2d(c, a, b) == s


class TestOrient3d:
    def test_positive_tetrahedron(self):
        assert orient3d((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)) == 1

    def test_coplanar(self):
        assert orient3d((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)) == 0

    def test_negative(self):
        assert orient3d((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, -1)) == -1

    @given(st.tuples(*(coords for _ in range(12))))
    @settings(max_examples=100, deadline=None)
    def test_swap_negates(self, cs):
        a, b, c, d = (cs[0:3], cs[3:6], cs[6:9], cs[9:12])
        s = orient3d(a, b, c, d)
        assert orient3d(b, a, c, d) == -s
        assert orient3d(a, c, b, d) == -s
        assert orient3d(a, b, d, c) == -s


class TestClosestPointOnSegment:
    def test_interior_foot(self):
        r = closest_point_on_segment((0, 1), (-1, 0), (1, 0))
        assert r.distance == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(r.point, (0, 0))
        assert r.location == OnEdgeInterior(param=0.5)

    def test_clamps_to_endpoint(self):
        r = closest_point_on_segment((2, 0), (-1, 0), (1, 0))
        assert r.distance == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(r.point, (1, 0))
        assert r.location == AtVertex(1)

    def test_point_on_segment_distance_zero(self):
        r = closest_point_on_segment((0.3, 0), (-1, 0), (1, 0))
        assert r.distance == pytest.approx(0.0, abs=1e-15)
        assert isinstance(r.location, OnEdgeInterior)
        assert r.location.param == pytest.approx(0.65, abs=1e-15)

    def test_degenerate_segment_raises(self):
        with pytest.raises(ValueError):
            closest_point_on_segment((0, 0), (1, 1), (1, 1))

    @given(coords, coords, coords, coords, coords, coords, st.floats(0.1, 10), st.floats(0, 2 * math.pi))
    @settings(max_examples=150, deadline=None)
    def test_rigid_invariance_and_scaling(self, px, py, ax, ay, bx, by, s, theta):
        a, b, p = pt2((ax, ay)), pt2((bx, by)), pt2((px, py))
        if float(np.linalg.norm(b - a)) < 1e-6:
            return
        base = closest_point_on_segment(p, a, b)
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        shift = np.array([3.7, -1.2])
        moved = closest_point_on_segment(rot @ p + shift, rot @ a + shift, rot @ b + shift)
        assert moved.distance == pytest.approx(base.distance, abs=1e-9)
        scaled = closest_point_on_segment(s * p, s * a, s * b)
        assert scaled.distance == pytest.approx(s * base.distance, rel=1e-9, abs=1e-12)


class TestClosestPointOnTriangle:
    def test_face_interior(self):
        r = closest_point_on_triangle((0, 0, 1), (-1, -1, 0), (2, -1, 0), (0, 2, 0))
        assert r.distance == pytest.approx(1.0, abs=1e-15)
        assert np.allclose(r.point, (0, 0, 0))
        assert isinstance(r.location, OnTriangleInterior)
        assert sum(r.location.bary) == pytest.approx(1.0, abs=1e-12)

    def test_edge_interior(self):
        r = closest_point_on_triangle((5, 0, 0), (0, -1, 0), (0, 1, 0), (-1, 0, 0))
        assert r.distance == pytest.approx(5.0, abs=1e-15)
        assert np.allclose(r.point, (0, 0, 0))
        assert r.location == OnEdgeInterior(param=0.5, index=0)

    def test_vertex_region_distance_zero(self):
        r = closest_point_on_triangle((0, -1, 0), (0, -1, 0), (0, 1, 0), (-1, 0, 0))
        assert r.distance == 0.0
        assert r.location == AtVertex(0)

    def test_degenerate_triangle_raises(self):
        with pytest.raises(ValueError):
            closest_point_on_triangle((0, 0, 1), (0, 0, 0), (1, 1, 1), (2, 2, 2))

    @given(st.tuples(*(coords for _ in range(9))), st.floats(0.1, 10))
    @settings(max_examples=100, deadline=None)
    def test_scaling(self, cs, s):
        p = np.array(cs[0:3])
        a, b, c = np.array(cs[3:6]), np.array(cs[6:9]), np.array([0.0, 0.0, 7.0])
        if float(np.linalg.norm(np.cross(b - a, c - a))) < 1e-5:
            return
        base = closest_point_on_triangle(p, a, b, c)
        scaled = closest_point_on_triangle(s * p, s * a, s * b, s * c)
        assert scaled.distance == pytest.approx(s * base.distance, rel=1e-8, abs=1e-10)


class TestClosestPairSegmentElement:
    def test_segment_to_point(self):
        r = closest_pair_segment_element((0, 0), (1, 0), np.array([[0.5, 2.0]]))
        assert r.distance == pytest.approx(2.0, abs=1e-15)
        assert np.allclose(r.anchor_point, (0.5, 0))
        assert r.anchor_location == OnEdgeInterior(param=0.5)

    def test_parallel_segments_pick_first_endpoint(self):
        r = closest_pair_segment_element((0, 0), (1, 0), np.array([[0.0, 1.0], [1.0, 1.0]]))
        assert r.distance == pytest.approx(1.0, abs=1e-15)
        assert r.anchor_location == AtVertex(0)
        assert np.allclose(r.anchor_point, (0, 0))

    def test_crossing_segments_distance_zero(self):
        r = closest_pair_segment_element((0, -1), (0, 1), np.array([[-1.0, 0.0], [1.0, 0.0]]))
        assert r.distance == pytest.approx(0.0, abs=1e-15)

    def test_segment_to_triangle(self):
        tri = np.array([[0.0, -1.0, 2.0], [0.0, 1.0, 2.0], [1.0, 0.0, 2.0]])
        r = closest_pair_segment_element((0.2, 0, 0), (0.4, 0, 0), tri)
        assert r.distance == pytest.approx(2.0, abs=1e-12)


class TestClosestPairTriangleElement:
    def test_triangle_to_point_above_face(self):
        tri = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        r = closest_pair_triangle_element(tri, np.array([[0.2, 0.2, 0.7]]))
        assert r.distance == pytest.approx(0.7, abs=1e-15)
        assert isinstance(r.anchor_location, OnTriangleInterior)

    def test_triangle_to_triangle_parallel(self):
        t1 = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        t2 = t1 + np.array([0.0, 0.0, 0.25])
        r = closest_pair_triangle_element(t1, t2)
        assert r.distance == pytest.approx(0.25, abs=1e-12)


class TestSegmentTieInterval:
    def test_parallel_full_interval(self):
        iv = segment_tie_interval((0, 0), (1, 0), np.array([[0.0, 1.0], [1.0, 1.0]]), 1.0 + 1e-12)
        assert iv is not None
        lo, hi = iv
        assert lo == pytest.approx(0.0, abs=1e-9)
        assert hi == pytest.approx(1.0, abs=1e-9)

    def test_point_target_narrow_interval(self):
        iv = segment_tie_interval((0, 0), (1, 0), np.array([[0.5, 1.0]]), 1.0 * (1 + 1e-9))
        assert iv is not None
        lo, hi = iv
        assert 0.49 < lo <= 0.5 <= hi < 0.51

    def test_out_of_reach(self):
        assert segment_tie_interval((0, 0), (1, 0), np.array([[0.5, 2.0]]), 1.0) is None


class TestIsAcuteAngle:
    def test_45_degrees(self):
        assert is_acute_angle((1, 0), (1, 1))

    def test_90_degrees(self):
        assert not is_acute_angle((1, 0), (0, 1))

    def test_135_degrees(self):
        assert not is_acute_angle((1, 0), (-1, 1))

    def test_zero_vector_raises(self):
        with pytest.raises(ValueError):
            is_acute_angle((0, 0), (1, 0))


class TestTieBreak:
    def test_lower_vertex_id_wins(self):
        a = EventKey(ElementKind.VERTEX, 3)
        b = EventKey(ElementKind.VERTEX, 7)
        assert tie_break([b, a]) == a

    def test_vertex_beats_edge(self):
        v = EventKey(ElementKind.VERTEX, 5)
        e = EventKey(ElementKind.EDGE, 2)
        assert tie_break([e, v]) == v

    def test_single_candidate_identity(self):
        k = EventKey(ElementKind.TRIANGLE, 11, 0.25)
        assert tie_break([k]) == k

    def test_empty_raises(self):
        with pytest.raises(ValueError):
            tie_break([])

    @given(st.lists(st.tuples(st.sampled_from(list(ElementKind)), st.integers(0, 50), st.floats(0, 1)), min_size=1, max_size=8))
    @settings(max_examples=100, deadline=None)
    def test_permutation_invariant(self, raw):
        keys = [EventKey(k, i, p) for (k, i, p) in raw]
        winner = tie_break(keys)
        assert tie_break(list(reversed(keys))) == winner
        assert winner in keys


class TestExactSegmentTests:
    def test_proper_crossing(self):
        assert segments_intersect((0, 0), (2, 2), (0, 2), (2, 0))

    def test_shared_endpoint_counts(self):
        assert segments_intersect((0, 0), (1, 0), (1, 0), (1, 1))

    def test_disjoint(self):
        assert not segments_intersect((0, 0), (1, 0), (0, 1), (1, 1))

    def test_point_on_segment(self):
        assert point_on_segment_2d((0.5, 0.5), (0, 0), (1, 1))
        assert not point_on_segment_2d((2, 2), (0, 0), (1, 1))


class TestPolygonArea:
    def test_signed_area_square(self):
        ring = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
        assert polygon_signed_area(ring) == pytest.approx(1.0)
        assert polygon_area_sign(ring) == 1
        assert polygon_area_sign(ring[::-1]) == -1
