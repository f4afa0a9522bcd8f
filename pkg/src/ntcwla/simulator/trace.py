"""Mobile node traces.

A trace maps simulation time to a position. All traces move at constant speed along a polyline:
open polylines are walked back and forth, closed ones wrap around.
"""

from __future__ import annotations

import math
from collections.abc import Sequence
from enum import Enum
from typing import ClassVar, Optional, Protocol

import attrs
from typing_extensions import override

from ..geometry import Point2D


class Trace(Protocol):
    """Position of the mobile node over time."""

    @property
    def duration_s(self) -> float:
        """Time needed to complete the trace."""
        ...

    def position(self, time_s: float) -> Point2D:
        ...


def _cumulative(points: Sequence[Point2D]) -> list[float]:
    lengths = [0.0]

    for a, b in zip(points, points[1:]):
        lengths.append(lengths[-1] + a.distance_to(b))

    return lengths


def _point_along(points: Sequence[Point2D], lengths: Sequence[float], s: float) -> Point2D:
    for i in range(1, len(points)):
        if s <= lengths[i] or i == len(points) - 1:
            seg = lengths[i] - lengths[i - 1]
            frac = 0.0 if seg == 0 else min(max((s - lengths[i - 1]) / seg, 0.0), 1.0)
            a, b = points[i - 1], points[i]

            return Point2D(a.x + (b.x - a.x) * frac, a.y + (b.y - a.y) * frac)

    return points[0]


def _positive(_: object, attribute: attrs.Attribute, value: float):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


@attrs.frozen()
class _Polyline:
    speed_cm_per_s: float = attrs.field(kw_only=True, converter=float, validator=_positive)
    loops: int = attrs.field(kw_only=True, default=1)
    duration_limit_s: Optional[float] = attrs.field(kw_only=True, default=None)

    closed: ClassVar[bool] = False

    @property
    def waypoints(self) -> tuple[Point2D, ...]:
        raise NotImplementedError()

    def _path(self) -> tuple[Point2D, ...]:
        points = self.waypoints
        return (*points, points[0]) if self.closed else points

    @property
    def length_cm(self) -> float:
        return _cumulative(self._path())[-1]

    @property
    def duration_s(self) -> float:
        if self.duration_limit_s is not None:
            return self.duration_limit_s

        return self.length_cm * self.loops / self.speed_cm_per_s

    def position(self, time_s: float) -> Point2D:
        path = self._path()
        lengths = _cumulative(path)
        total = lengths[-1]

        if total == 0:
            return path[0]

        s = self.speed_cm_per_s * max(time_s, 0.0)

        if self.closed:
            s = math.fmod(s, total)
        else:
            lap, s = divmod(s, total)

            if int(lap) % 2 == 1:
                s = total - s

        return _point_along(path, lengths, s)


@attrs.frozen()
class LinearDiagonal(_Polyline):
    """Straight run from ``start`` to ``end``."""

    start: Point2D = attrs.field()
    end: Point2D = attrs.field()

    @property
    @override
    def waypoints(self) -> tuple[Point2D, ...]:
        return (self.start, self.end)


@attrs.frozen()
class SquarePerimeter(_Polyline):
    """Counter-clockwise loop around the rectangle spanned by two corners."""

    min_corner: Point2D = attrs.field()
    max_corner: Point2D = attrs.field()

    closed: ClassVar[bool] = True

    @property
    @override
    def waypoints(self) -> tuple[Point2D, ...]:
        lo, hi = self.min_corner, self.max_corner
        return (lo, Point2D(hi.x, lo.y), hi, Point2D(lo.x, hi.y))


@attrs.frozen()
class Waypoints(_Polyline):
    points: tuple[Point2D, ...] = attrs.field(converter=tuple)

    @points.validator
    def _check_points(self, _: attrs.Attribute, value: tuple[Point2D, ...]):
        if len(value) < 2:
            raise ValueError("a waypoint trace needs at least 2 points")

    @property
    @override
    def waypoints(self) -> tuple[Point2D, ...]:
        return self.points


class TraceKind(Enum):
    LINEAR_DIAGONAL = "linear_diagonal"
    SQUARE_PERIMETER = "square_perimeter"
    WAYPOINTS = "waypoints"


@attrs.frozen()
class TraceSpec:
    """Declarative trace description as found in simulation documents.

    Args:
        kind: Shape of the trace
        points: ``(start, end)``, ``(min_corner, max_corner)`` or the waypoint list, in cm
        speed_cm_per_s: Constant speed of the mobile node
        loops: Number of times the trace is walked
        duration_s: Explicit run length overriding ``loops``
    """

    kind: TraceKind
    points: tuple[Point2D, ...] = attrs.field(converter=tuple)
    speed_cm_per_s: float = attrs.field(default=1.0, converter=float)
    loops: int = attrs.field(default=1)
    duration_s: Optional[float] = attrs.field(default=None)

    @points.validator
    def _check_points(self, _: attrs.Attribute, value: tuple[Point2D, ...]):
        if self.kind is not TraceKind.WAYPOINTS and len(value) != 2:
            raise ValueError(f"{self.kind.value} traces take exactly 2 points, got {len(value)}")

    @loops.validator
    def _check_loops(self, _: attrs.Attribute, value: int):
        if value < 1:
            raise ValueError(f"loops must be at least 1, got {value}")

    def build(self) -> Trace:
        options = {
            "speed_cm_per_s": self.speed_cm_per_s,
            "loops": self.loops,
            "duration_limit_s": self.duration_s,
        }

        if self.kind is TraceKind.LINEAR_DIAGONAL:
            return LinearDiagonal(self.points[0], self.points[1], **options)

        if self.kind is TraceKind.SQUARE_PERIMETER:
            return SquarePerimeter(self.points[0], self.points[1], **options)

        return Waypoints(self.points, **options)
