"""Circle intersection kernel of the trilateral centroid method.

Every reliable beacon defines a circle centered at its position with the measured distance as
radius. Pairs of circles are classified by their number of intersections and each triple of
circles is reduced to a single reference coordinate for the mobile node.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from enum import Enum, IntEnum
from typing import Any, Final, Optional

import attrs

from .errors import ValidationError

DEFAULT_EPS: Final[float] = 1e-6


def _finite(_: Any, attribute: attrs.Attribute, value: float):
    if not math.isfinite(value):
        raise ValueError(f"{attribute.name} must be finite, got {value}")


@attrs.frozen()
class Point2D:
    """A planar position in centimeters."""

    x: float = attrs.field(converter=float, validator=_finite)
    y: float = attrs.field(converter=float, validator=_finite)

    def distance_to(self, other: Point2D) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)

    def midpoint(self, other: Point2D) -> Point2D:
        return Point2D((self.x + other.x) / 2, (self.y + other.y) / 2)

    def translate(self, dx: float, dy: float) -> Point2D:
        return Point2D(self.x + dx, self.y + dy)

    def key(self) -> tuple[float, float]:
        return (self.x, self.y)


def centroid(points: Sequence[Point2D]) -> Point2D:
    return Point2D(
        math.fsum(p.x for p in points) / len(points),
        math.fsum(p.y for p in points) / len(points),
    )


@attrs.frozen()
class Circle:
    center: Point2D
    radius_cm: float = attrs.field(converter=float)

    @radius_cm.validator
    def _check_radius(self, _: attrs.Attribute, value: float):
        if not (math.isfinite(value) and value > 0):
            raise ValueError(f"radius must be positive and finite, got {value}")


class PairKind(IntEnum):
    """Number of intersections of two circles, encoded as 1 (two), 0 (one) and -1 (none)."""

    TWO = 1
    ONE = 0
    NONE = -1


_POINT_COUNTS: Final[dict[PairKind, int]] = {PairKind.TWO: 2, PairKind.ONE: 1, PairKind.NONE: 0}


@attrs.frozen()
class PairRelation:
    kind: PairKind
    points: tuple[Point2D, ...] = attrs.field(default=(), converter=tuple)

    @points.validator
    def _check_points(self, _: attrs.Attribute, value: tuple[Point2D, ...]):
        if len(value) != _POINT_COUNTS[self.kind]:
            raise ValueError(f"{self.kind.name} relation cannot hold {len(value)} points")

        if self.kind is PairKind.TWO and value[0] == value[1]:
            raise ValueError("the two intersection points must be distinct")

    @property
    def intersects(self) -> bool:
        return self.kind is not PairKind.NONE


_NO_INTERSECTION: Final[PairRelation] = PairRelation(PairKind.NONE)


@attrs.frozen()
class TestArea:
    """Axis-aligned rectangle in which the mobile node is known to be."""

    __test__ = False

    min_corner: Point2D
    max_corner: Point2D

    def __attrs_post_init__(self):
        if not (self.min_corner.x < self.max_corner.x and self.min_corner.y < self.max_corner.y):
            raise ValueError(f"area corners {self.min_corner}, {self.max_corner} are not ordered")

    def contains(self, point: Point2D, eps: float = 0.0) -> bool:
        return (
            self.min_corner.x - eps <= point.x <= self.max_corner.x + eps
            and self.min_corner.y - eps <= point.y <= self.max_corner.y + eps
        )

    @property
    def center(self) -> Point2D:
        return self.min_corner.midpoint(self.max_corner)


class TripleKind(Enum):
    COMMON_POINT = "common_point"
    REGION = "region"
    LINE = "line"
    TWO_ONLY = "two_only"
    NO_INTERSECTION = "no_intersection"


@attrs.frozen()
class ReferenceCoordinate:
    """Candidate position produced by one triple of circles.

    Args:
        point: The candidate position
        mr_cm: Smallest measured distance of the triple, the basis of the candidate's weight
        triple: Beacon ids of the three circles
    """

    point: Point2D
    mr_cm: float
    triple: tuple[int, int, int] = attrs.field(default=(0, 1, 2))
    kind: TripleKind = attrs.field(default=TripleKind.COMMON_POINT, kw_only=True)


def circle_pair(a: Circle, b: Circle, eps: float = DEFAULT_EPS) -> PairRelation:
    dx = b.center.x - a.center.x
    dy = b.center.y - a.center.y
    d = math.hypot(dx, dy)
    ra, rb = a.radius_cm, b.radius_cm

    if d <= eps or d > ra + rb + eps or d < abs(ra - rb) - eps:
        return _NO_INTERSECTION

    # Distance from a's center to the chord along the line of centers
    along = (d * d + ra * ra - rb * rb) / (2 * d)
    ux, uy = dx / d, dy / d
    base = Point2D(a.center.x + along * ux, a.center.y + along * uy)

    if abs(d - (ra + rb)) <= eps or abs(d - abs(ra - rb)) <= eps:
        return PairRelation(PairKind.ONE, (base,))

    h = math.sqrt(max(ra * ra - along * along, 0.0))

    if h == 0.0:
        return PairRelation(PairKind.ONE, (base,))

    first = Point2D(base.x - h * uy, base.y + h * ux)
    second = Point2D(base.x + h * uy, base.y - h * ux)

    return PairRelation(PairKind.TWO, sorted((first, second), key=Point2D.key))


def _tolerance(point: Point2D, eps: float) -> float:
    return eps * max(1.0, abs(point.x), abs(point.y))


def _common_points(
    rel_ab: PairRelation, rel_bc: PairRelation, rel_ac: PairRelation, eps: float
) -> list[Point2D]:
    common = []

    for p in rel_ab.points:
        tol = _tolerance(p, eps)
        q = [other for other in rel_bc.points if p.distance_to(other) <= tol]
        r = [other for other in rel_ac.points if p.distance_to(other) <= tol]

        if q and r:
            common.append(centroid([p, q[0], r[0]]))

    return common


def classify_triple(
    rel_ab: PairRelation, rel_bc: PairRelation, rel_ac: PairRelation, eps: float = DEFAULT_EPS
) -> TripleKind:
    intersecting = sum(rel.intersects for rel in (rel_ab, rel_bc, rel_ac))

    if intersecting == 3:
        if _common_points(rel_ab, rel_bc, rel_ac, eps):
            return TripleKind.COMMON_POINT

        return TripleKind.REGION

    if intersecting == 2:
        return TripleKind.LINE

    if intersecting == 1:
        return TripleKind.TWO_ONLY

    return TripleKind.NO_INTERSECTION


def _choose(points: Sequence[Point2D], third: Point2D, area: TestArea, eps: float) -> Point2D:
    """Pick the intersection inside the area, or the one closer to the third circle's center."""

    if len(points) == 1:
        return points[0]

    inside = [p for p in points if area.contains(p, eps)]

    if len(inside) == 1:
        return inside[0]

    return min(points, key=lambda p: (p.distance_to(third), p.x, p.y))


def _two_only_point(rel: PairRelation, third: Circle, eps: float) -> Point2D:
    center = third.center
    p = min(rel.points, key=lambda p: (p.distance_to(center), p.x, p.y))
    dist = p.distance_to(center)

    if dist <= third.radius_cm + eps:
        return p

    scale = third.radius_cm / dist
    q = Point2D(center.x + (p.x - center.x) * scale, center.y + (p.y - center.y) * scale)

    return p.midpoint(q)


def triple_reference(
    ca: Circle,
    cb: Circle,
    cc: Circle,
    relations: Optional[tuple[PairRelation, PairRelation, PairRelation]] = None,
    area: Optional[TestArea] = None,
    eps: float = DEFAULT_EPS,
    *,
    triple: tuple[int, int, int] = (0, 1, 2),
) -> Optional[ReferenceCoordinate]:
    """Reduce three circles to one reference coordinate.

    Args:
        ca: First circle
        cb: Second circle
        cc: Third circle
        relations: Pair relations of (ca, cb), (cb, cc) and (ca, cc), computed when omitted
        area: The test area, used to pick between intersection points
        eps: Geometric tolerance in centimeters
        triple: Beacon ids recorded on the result

    Returns:
        The reference coordinate, or None when no two circles intersect or when the centers are
        collinear and both mirror-image common points lie inside the area.
    """

    if relations is None:
        relations = (circle_pair(ca, cb, eps), circle_pair(cb, cc, eps), circle_pair(ca, cc, eps))

    if area is None:
        raise ValidationError("a test area is required to resolve intersection points")

    rel_ab, rel_bc, rel_ac = relations
    kind = classify_triple(rel_ab, rel_bc, rel_ac, eps)
    circles = (ca, cb, cc)
    pairs = (((0, 1), rel_ab), ((1, 2), rel_bc), ((0, 2), rel_ac))

    if kind is TripleKind.NO_INTERSECTION:
        return None

    if kind is TripleKind.COMMON_POINT:
        common = _common_points(rel_ab, rel_bc, rel_ac, eps)
        inside = [p for p in common if area.contains(p, eps)]

        if len(inside) > 1:
            return None

        point = inside[0] if inside else min(common, key=Point2D.key)
    elif kind is TripleKind.TWO_ONLY:
        (i, j), rel = next(pair for pair in pairs if pair[1].intersects)
        point = _two_only_point(rel, circles[3 - i - j], eps)
    else:
        chosen = [
            _choose(rel.points, circles[3 - i - j].center, area, eps)
            for (i, j), rel in pairs
            if rel.intersects
        ]
        point = centroid(chosen)

    mr = min(c.radius_cm for c in circles)

    return ReferenceCoordinate(point, mr, triple, kind=kind)
