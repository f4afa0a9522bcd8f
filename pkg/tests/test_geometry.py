from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from ntcwla.errors import ValidationError
from ntcwla.geometry import (
    Circle,
    PairKind,
    Point2D,
    TestArea,
    TripleKind,
    circle_pair,
    classify_triple,
    triple_reference,
)

WIDE = TestArea(Point2D(-30, -30), Point2D(30, 30))


def _circle(x: float, y: float, r: float) -> Circle:
    return Circle(Point2D(x, y), r)


def _relations(a: Circle, b: Circle, c: Circle):
    return circle_pair(a, b), circle_pair(b, c), circle_pair(a, c)


def _on_circle(p: Point2D, c: Circle, tol: float = 1e-6) -> bool:
    return abs(p.distance_to(c.center) - c.radius_cm) <= tol


class TestCirclePair:
    def test_external_tangency(self):
        rel = circle_pair(_circle(0, 0, 1), _circle(2, 0, 1))

        assert rel.kind is PairKind.ONE
        assert rel.points == (Point2D(1, 0),)

    def test_two_intersections(self):
        rel = circle_pair(_circle(0, 0, 2), _circle(2, 0, 2))

        assert rel.kind is PairKind.TWO
        (p, q) = rel.points
        assert (p.x, p.y) == pytest.approx((1, -math.sqrt(3)))
        assert (q.x, q.y) == pytest.approx((1, math.sqrt(3)))

    def test_disjoint(self):
        rel = circle_pair(_circle(0, 0, 1), _circle(10, 0, 1))

        assert rel.kind is PairKind.NONE
        assert rel.points == ()

    def test_contained(self):
        assert circle_pair(_circle(0, 0, 10), _circle(1, 0, 2)).kind is PairKind.NONE

    def test_internal_tangency(self):
        rel = circle_pair(_circle(0, 0, 3), _circle(1, 0, 2))

        assert rel.kind is PairKind.ONE
        assert rel.points == (Point2D(3, 0),)

    def test_concentric(self):
        assert circle_pair(_circle(5, 5, 3), _circle(5, 5, 3)).kind is PairKind.NONE

    def test_kind_encoding(self):
        assert [int(k) for k in (PairKind.TWO, PairKind.ONE, PairKind.NONE)] == [1, 0, -1]

    @given(
        st.tuples(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.5, 100)),
        st.tuples(st.floats(-100, 100), st.floats(-100, 100), st.floats(0.5, 100)),
    )
    def test_symmetric_and_on_both_circles(self, first, second):
        a, b = _circle(*first), _circle(*second)
        d = a.center.distance_to(b.center)
        ra, rb = a.radius_cm, b.radius_cm

        for margin in (abs(d - (ra + rb)), abs(d - abs(ra - rb))):
            assume(margin == 0 or margin > 1e-3)

        ab, ba = circle_pair(a, b), circle_pair(b, a)

        assert ab.kind is ba.kind

        for p in ab.points:
            assert min(p.distance_to(q) for q in ba.points) <= 1e-6

        for p in ab.points:
            assert _on_circle(p, a, 1e-6 * max(1.0, a.radius_cm))
            assert _on_circle(p, b, 1e-6 * max(1.0, b.radius_cm))


def _roots_by_bisection(a: Circle, b: Circle, samples: int = 7200) -> list[Point2D]:
    """Intersections found by scanning the angle around ``a`` for sign changes of the gap."""

    def gap(theta: np.ndarray) -> np.ndarray:
        x = a.center.x + a.radius_cm * np.cos(theta)
        y = a.center.y + a.radius_cm * np.sin(theta)
        return np.hypot(x - b.center.x, y - b.center.y) - b.radius_cm

    thetas = np.linspace(0.0, 2 * math.pi, samples + 1)
    values = gap(thetas)
    roots = []

    for i in np.nonzero(np.sign(values[:-1]) != np.sign(values[1:]))[0]:
        lo, hi = thetas[i], thetas[i + 1]

        for _ in range(80):
            mid = (lo + hi) / 2

            if np.sign(gap(np.array([mid]))[0]) == np.sign(gap(np.array([lo]))[0]):
                lo = mid
            else:
                hi = mid

        theta = (lo + hi) / 2
        x = a.center.x + a.radius_cm * math.cos(theta)
        y = a.center.y + a.radius_cm * math.sin(theta)
        roots.append(Point2D(x, y))

    return sorted(roots, key=Point2D.key)


def test_pairs_agree_with_bisection_oracle():
    rng = np.random.default_rng(20240611)
    checked = 0

    while checked < 1000:
        ax, ay, bx, by = rng.uniform(0, 100, size=4)
        ra, rb = rng.uniform(5, 80, size=2)
        a, b = _circle(ax, ay, ra), _circle(bx, by, rb)
        d = a.center.distance_to(b.center)

        # Near-tangent pairs are outside the resolution of the angular scan
        if min(abs(d - (ra + rb)), abs(d - abs(ra - rb))) < 0.5:
            continue

        checked += 1
        rel = circle_pair(a, b)
        expected = _roots_by_bisection(a, b)

        assert len(rel.points) == len(expected)
        assert rel.kind is (PairKind.TWO if expected else PairKind.NONE)

        for p in rel.points:
            assert min(p.distance_to(q) for q in expected) <= 1e-4


class TestClassifyTriple:
    def test_common_point(self):
        a, b, c = _circle(0, 0, 1), _circle(2, 0, 1), _circle(1, 1, 1)
        assert classify_triple(*_relations(a, b, c)) is TripleKind.COMMON_POINT

    def test_region(self):
        a, b, c = _circle(0, 0, 6), _circle(10, 0, 6), _circle(5, 8, 6)
        assert classify_triple(*_relations(a, b, c)) is TripleKind.REGION

    def test_line(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(8, 0, 3)
        assert classify_triple(*_relations(a, b, c)) is TripleKind.LINE

    def test_two_only(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(2, 5, 2)
        assert classify_triple(*_relations(a, b, c)) is TripleKind.TWO_ONLY

    def test_no_intersection(self):
        a, b, c = _circle(0, 0, 1), _circle(10, 0, 1), _circle(0, 10, 1)
        assert classify_triple(*_relations(a, b, c)) is TripleKind.NO_INTERSECTION


class TestTripleReference:
    def test_common_point(self):
        ref = triple_reference(_circle(0, 0, 1), _circle(2, 0, 1), _circle(1, 1, 1), area=WIDE)

        assert ref is not None
        assert ref.kind is TripleKind.COMMON_POINT
        assert ref.point.distance_to(Point2D(1, 0)) <= 1e-9
        assert ref.mr_cm == 1

    def test_two_only_midpoint(self):
        ref = triple_reference(_circle(0, 0, 3), _circle(4, 0, 3), _circle(2, 5, 2), area=WIDE)

        assert ref is not None
        assert ref.kind is TripleKind.TWO_ONLY
        # P = (2, sqrt 5) is the intersection nearer (2, 5); Q = (2, 3) lies on the third circle
        assert ref.point.x == pytest.approx(2)
        assert ref.point.y == pytest.approx((math.sqrt(5) + 3) / 2)
        assert ref.mr_cm == 2

    def test_two_only_inside_third_circle(self):
        ref = triple_reference(_circle(0, 0, 3), _circle(4, 0, 3), _circle(2, 0, 20), area=WIDE)

        assert ref is not None
        assert ref.kind is TripleKind.TWO_ONLY
        # Both points are equally close to (2, 0), ties go to the lexicographically smaller one
        assert ref.point.x == pytest.approx(2)
        assert ref.point.y == pytest.approx(-math.sqrt(5))

    def test_region_is_centroid_of_chosen_points(self):
        a, b, c = _circle(0, 0, 6), _circle(10, 0, 6), _circle(5, 8, 6)
        ref = triple_reference(a, b, c, area=TestArea(Point2D(-5, -5), Point2D(15, 15)))

        assert ref is not None
        assert ref.kind is TripleKind.REGION

        for circle in (a, b, c):
            assert ref.point.distance_to(circle.center) < circle.radius_cm

        # Every pair keeps the point nearer the third center:
        # (5, sqrt 11), (7.5 - 8k, 4 - 5k) and (2.5 + 8k, 4 - 5k) with k = sqrt(13.75 / 89)
        k = math.sqrt(13.75 / 89)
        assert ref.point.x == pytest.approx(5)
        assert ref.point.y == pytest.approx((math.sqrt(11) + 8 - 10 * k) / 3)

    def test_line_prefers_points_inside_area(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(8, 0, 3)
        ref = triple_reference(a, b, c, area=TestArea(Point2D(-10, 0), Point2D(10, 10)))

        assert ref is not None
        assert ref.kind is TripleKind.LINE
        # Midpoint of (2, sqrt 5) and (6, sqrt 5), the only intersections with y >= 0
        assert ref.point.x == pytest.approx(4)
        assert ref.point.y == pytest.approx(math.sqrt(5))
        assert ref.mr_cm == 3

    def test_line_tie_breaks_lexicographically(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(8, 0, 3)
        ref = triple_reference(a, b, c, area=WIDE)

        assert ref is not None
        assert ref.point.x == pytest.approx(4)
        assert ref.point.y == pytest.approx(-math.sqrt(5))

    def test_line_area_overrides_third_center(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(9, 1, 3)
        ref = triple_reference(a, b, c, area=TestArea(Point2D(-10, -10), Point2D(10, 0)))
        # b and c intersect at (6.5, 0.5) +- k (-1, 5) with k = sqrt(2.5 / 26)
        k = math.sqrt(2.5 / 26)

        assert ref is not None
        assert ref.kind is TripleKind.LINE
        assert ref.point.x == pytest.approx((2 + 6.5 + k) / 2)
        assert ref.point.y == pytest.approx((-math.sqrt(5) + 0.5 - 5 * k) / 2)

    def test_line_outside_area_uses_third_center(self):
        a, b, c = _circle(0, 0, 3), _circle(4, 0, 3), _circle(9, 1, 3)
        ref = triple_reference(a, b, c, area=TestArea(Point2D(20, 20), Point2D(30, 30)))
        k = math.sqrt(2.5 / 26)

        assert ref is not None
        assert ref.kind is TripleKind.LINE
        # (2, sqrt 5) is nearer (9, 1), (6.5 - k, 0.5 + 5k) is nearer (0, 0)
        assert ref.point.x == pytest.approx((2 + 6.5 - k) / 2)
        assert ref.point.y == pytest.approx((math.sqrt(5) + 0.5 + 5 * k) / 2)

    def test_no_intersection(self):
        a, b, c = _circle(0, 0, 1), _circle(10, 0, 1), _circle(0, 10, 1)
        assert triple_reference(a, b, c, area=WIDE) is None

    def test_mirror_ambiguity_inside_area(self):
        # Collinear centers share both mirror points; both inside the area
        a, b, c = _circle(0, 0, 5), _circle(6, 0, 5), _circle(-6, 0, math.hypot(9, 4))
        assert triple_reference(a, b, c, area=WIDE) is None

    def test_mirror_resolved_by_area(self):
        a, b, c = _circle(0, 0, 5), _circle(6, 0, 5), _circle(-6, 0, math.hypot(9, 4))
        ref = triple_reference(a, b, c, area=TestArea(Point2D(-10, 0), Point2D(10, 10)))

        assert ref is not None
        assert ref.point.distance_to(Point2D(3, 4)) <= 1e-6

    def test_area_required(self):
        with pytest.raises(ValidationError, match="test area"):
            triple_reference(_circle(0, 0, 1), _circle(2, 0, 1), _circle(1, 1, 1))

    def test_triple_ids_recorded(self):
        ref = triple_reference(
            _circle(0, 0, 1), _circle(2, 0, 1), _circle(1, 1, 1), area=WIDE, triple=(4, 7, 9)
        )

        assert ref is not None
        assert ref.triple == (4, 7, 9)


def _distance_to_line(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab, ap = b - a, p - a
    return abs(ab[0] * ap[1] - ab[1] * ap[0]) / np.hypot(*ab)


def test_exact_distances_recover_true_point():
    rng = np.random.default_rng(7)
    area = TestArea(Point2D(0, 0), Point2D(100, 100))
    checked = 0

    while checked < 500:
        true = rng.uniform(0, 100, size=2)
        centers = rng.uniform(0, 100, size=(3, 2))
        radii = np.hypot(*(centers - true).T)
        a, b, c = centers
        doubled_area = abs((b - a)[0] * (c - a)[1] - (b - a)[1] * (c - a)[0])

        if radii.min() < 1 or doubled_area < 200:
            continue

        # Keep every pair's chord well resolved
        if min(_distance_to_line(true, p, q) for p, q in ((a, b), (b, c), (a, c))) < 1:
            continue

        checked += 1
        circles = [_circle(x, y, r) for (x, y), r in zip(centers, radii)]

        assert classify_triple(*_relations(*circles)) is TripleKind.COMMON_POINT

        ref = triple_reference(*circles, area=area)

        assert ref is not None
        assert ref.point.distance_to(Point2D(*true)) <= 1e-6


@given(
    st.lists(
        st.tuples(st.floats(0, 100), st.floats(0, 100), st.floats(1, 120)), min_size=3, max_size=3
    )
)
def test_reference_stays_near_centers(specs):
    circles = []

    for x, y, r in specs:
        circles.append(_circle(x, y, r))

    ref = triple_reference(*circles, area=TestArea(Point2D(0, 0), Point2D(100, 100)))

    if ref is None:
        return

    reach = max(c.radius_cm for c in circles)
    xs = [c.center.x for c in circles]
    ys = [c.center.y for c in circles]

    assert min(xs) - reach - 1e-6 <= ref.point.x <= max(xs) + reach + 1e-6
    assert min(ys) - reach - 1e-6 <= ref.point.y <= max(ys) + reach + 1e-6
