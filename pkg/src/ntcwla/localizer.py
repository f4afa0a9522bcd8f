"""N-times trilateral centroid localization with reciprocal-distance weighting."""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from itertools import combinations
from typing import Any, Final

import attrs
import numpy as np

from .errors import LocalizationError, ValidationError
from .geometry import (
    DEFAULT_EPS,
    Circle,
    PairRelation,
    Point2D,
    ReferenceCoordinate,
    TestArea,
    circle_pair,
    triple_reference,
)
from .rssi_pipeline import ReliableBeacon

DEFAULT_FILTER_THRESHOLD_CM: Final[float] = 20.0

logger = logging.getLogger("ntcwla.localizer")
logger.addHandler(logging.NullHandler())


class InsufficientBeaconsError(LocalizationError):
    def __init__(self, ann: int, required: int):
        super().__init__(
            f"localization skipped this period: {ann} reliable beacons, {required} required"
        )
        self.ann = ann


class NoReferencesError(LocalizationError):
    def __init__(self, n_triples: int):
        super().__init__(f"none of the {n_triples} beacon triples produced a reference coordinate")
        self.n_triples = n_triples


class BeaconLayoutError(ValidationError):
    pass


@attrs.frozen()
class LocalizerConfig:
    """Options of the fusion stage.

    Args:
        filter_threshold_cm: References farther than this from the first estimate are discarded
        min_reliable: Fewest reliable beacons for which localization is attempted
        eps: Geometric tolerance in centimeters
    """

    filter_threshold_cm: float = attrs.field(default=DEFAULT_FILTER_THRESHOLD_CM, converter=float)
    min_reliable: int = attrs.field(default=3)
    eps: float = attrs.field(default=DEFAULT_EPS, converter=float)

    @filter_threshold_cm.validator
    def _check_threshold(self, _: attrs.Attribute, value: float):
        if not value > 0:
            raise ValueError(f"filter_threshold_cm must be positive, got {value}")

    @min_reliable.validator
    def _check_min_reliable(self, _: attrs.Attribute, value: int):
        if value < 3:
            raise ValueError(f"min_reliable must be at least 3, got {value}")


@attrs.frozen()
class LocalizationResult:
    estimate: Point2D
    n_triples: int
    n_references: int
    n_after_filter: int
    beacons_used: tuple[int, ...]
    references: tuple[ReferenceCoordinate, ...] = attrs.field(repr=False)
    first_estimate: Point2D = attrs.field(kw_only=True)

    @property
    def ann(self) -> int:
        return len(self.beacons_used)

    def to_json(self, period: int) -> dict[str, Any]:
        return {
            "period": period,
            "estimate": [self.estimate.x, self.estimate.y],
            "ann": self.ann,
            "n_triples": self.n_triples,
            "n_references": self.n_references,
            "n_after_filter": self.n_after_filter,
            "beacons": list(self.beacons_used),
        }


def reference_weights(refs: Sequence[ReferenceCoordinate]) -> list[float]:
    """Normalized reciprocal-distance weights: ``(1 / mr_i) / sum_k (1 / mr_k)``."""

    if not refs:
        raise ValidationError("cannot weight an empty list of reference coordinates")

    if any(not ref.mr_cm > 0 for ref in refs):
        raise ValidationError("every reference coordinate needs a positive mr")

    reciprocals = [1.0 / ref.mr_cm for ref in refs]
    total = math.fsum(reciprocals)

    return [r / total for r in reciprocals]


def weighted_position(refs: Sequence[ReferenceCoordinate], weights: Sequence[float]) -> Point2D:
    if len(refs) != len(weights):
        raise ValidationError(f"{len(refs)} references but {len(weights)} weights")

    points = np.array([[ref.point.x, ref.point.y] for ref in refs], dtype=float)
    x, y = np.asarray(weights, dtype=float) @ points

    return Point2D(x, y)


def filter_references(
    refs: Sequence[ReferenceCoordinate], anchor: Point2D, threshold_cm: float
) -> list[ReferenceCoordinate]:
    """Drop references farther than ``threshold_cm`` from ``anchor``.

    If every reference would be dropped the closest one is kept instead.
    """

    if not refs:
        raise ValidationError("cannot filter an empty list of reference coordinates")

    kept = [ref for ref in refs if ref.point.distance_to(anchor) <= threshold_cm]

    if kept:
        return kept

    return [min(refs, key=lambda ref: ref.point.distance_to(anchor))]


def _circles(
    reliable: Sequence[ReliableBeacon], beacon_positions: Mapping[int, Point2D]
) -> list[Circle]:
    try:
        centers = [beacon_positions[b.beacon_index] for b in reliable]
    except KeyError as e:
        raise BeaconLayoutError(f"No position for beacon {e.args[0]}") from None

    if len(set(centers)) != len(centers):
        raise BeaconLayoutError("reliable beacons must have distinct positions")

    return [Circle(c, b.measured_distance_cm) for c, b in zip(centers, reliable)]


def localize(
    reliable: Sequence[ReliableBeacon],
    beacon_positions: Mapping[int, Point2D],
    area: TestArea,
    cfg: LocalizerConfig | None = None,
) -> LocalizationResult:
    """Estimate the mobile node position from the reliable beacons of one period.

    Every 3-combination of reliable beacons yields at most one reference coordinate. The
    weighted mean of all references anchors an outlier filter, and the weighted mean of the
    surviving references is the estimate.
    """

    cfg = cfg or LocalizerConfig()
    ann = len(reliable)

    if ann < cfg.min_reliable:
        raise InsufficientBeaconsError(ann, cfg.min_reliable)

    # Canonical order keeps the result independent of how the beacons were listed
    ordered = sorted(reliable, key=lambda b: b.beacon_index)
    ids = [b.beacon_index for b in ordered]
    circles = _circles(ordered, beacon_positions)
    relations: dict[tuple[int, int], PairRelation] = {
        (i, j): circle_pair(circles[i], circles[j], cfg.eps)
        for i, j in combinations(range(ann), 2)
    }

    refs = []
    n_triples = 0

    for i, j, k in combinations(range(ann), 3):
        n_triples += 1
        ref = triple_reference(
            circles[i],
            circles[j],
            circles[k],
            (relations[i, j], relations[j, k], relations[i, k]),
            area,
            cfg.eps,
            triple=(ids[i], ids[j], ids[k]),
        )

        if ref is not None:
            refs.append(ref)

    if not refs:
        raise NoReferencesError(n_triples)

    first = weighted_position(refs, reference_weights(refs))
    kept = filter_references(refs, first, cfg.filter_threshold_cm)
    estimate = weighted_position(kept, reference_weights(kept))

    logger.debug(
        f"ann={ann} N={n_triples} N1={len(refs)} N2={len(kept)} "
        f"estimate=({estimate.x:.2f}, {estimate.y:.2f})"
    )

    return LocalizationResult(
        estimate,
        n_triples,
        len(refs),
        len(kept),
        tuple(ids),
        tuple(refs),
        first_estimate=first,
    )
