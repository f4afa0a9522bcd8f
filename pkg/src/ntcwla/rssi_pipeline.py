"""Per-beacon RSSI storage, weighted current RSSI and reliable beacon selection."""

from __future__ import annotations

import functools
import logging
import math
from collections import deque
from collections.abc import Iterable, Sequence
from fractions import Fraction
from typing import Final, Optional

import attrs

from .calibration import PathLossParams, rssi_to_distance
from .errors import ValidationError

DEFAULT_RPN: Final[int] = 5
DEFAULT_MR: Final[float] = -70.0
DEFAULT_RR: Final[float] = -55.0

logger = logging.getLogger("ntcwla.pipeline")
logger.addHandler(logging.NullHandler())


class UnknownBeaconError(ValidationError):
    def __init__(self, beacon_id: int):
        super().__init__(f"Unknown beacon id {beacon_id}")
        self.beacon_id = beacon_id


class HistoryNotFullError(ValidationError):
    def __init__(self, length: int, rpn: int):
        super().__init__(f"RSSI history holds {length} values, {rpn} are required")


def _optional_positive(_: object, attribute: attrs.Attribute, value: Optional[int]):
    if value is not None and value < 1:
        raise ValueError(f"{attribute.name} must be at least 1, got {value}")


@attrs.frozen()
class PipelineConfig:
    """Thresholds of the packet pipeline.

    Args:
        rpn: Packets kept per beacon, the length of each history
        mr: Storage threshold in dBm, weaker packets are discarded
        rr: Reliability threshold in dBm applied to the weighted current RSSI
        max_reliable: Optional cap on the number of beacons selected per period
    """

    rpn: int = attrs.field(default=DEFAULT_RPN)
    mr: float = attrs.field(default=DEFAULT_MR, converter=float)
    rr: float = attrs.field(default=DEFAULT_RR, converter=float)
    max_reliable: Optional[int] = attrs.field(default=None, validator=_optional_positive)

    @rpn.validator
    def _check_rpn(self, _: attrs.Attribute, value: int):
        if value < 1:
            raise ValueError(f"rpn must be at least 1, got {value}")

    @rr.validator
    def _check_rr(self, _: attrs.Attribute, value: float):
        if not value > self.mr:
            raise ValueError(f"rr ({value}) must be greater than mr ({self.mr})")


@attrs.define()
class RssiHistoryStore:
    """Fixed-capacity FIFO of accepted RSSI readings for every registered beacon.

    Beacons are kept in registration order, which is also the order in which reliable beacons
    are reported.
    """

    rpn: int = attrs.field()
    _histories: dict[int, deque[float]] = attrs.field(factory=dict, init=False)

    @classmethod
    def create(cls, beacon_ids: Iterable[int], rpn: int = DEFAULT_RPN) -> RssiHistoryStore:
        store = cls(rpn)

        for beacon_id in beacon_ids:
            store.register(beacon_id)

        return store

    def register(self, beacon_id: int):
        if beacon_id in self._histories:
            raise ValidationError(f"Beacon {beacon_id} is already registered")

        self._histories[beacon_id] = deque(maxlen=self.rpn)

    @property
    def beacon_ids(self) -> list[int]:
        return list(self._histories)

    @property
    def beacon_count(self) -> int:
        return len(self._histories)

    def _fifo(self, beacon_id: int) -> deque[float]:
        try:
            return self._histories[beacon_id]
        except KeyError:
            raise UnknownBeaconError(beacon_id) from None

    def history(self, beacon_id: int) -> tuple[float, ...]:
        """Stored readings of a beacon, oldest first."""

        return tuple(self._fifo(beacon_id))

    def is_full(self, beacon_id: int) -> bool:
        return len(self._fifo(beacon_id)) == self.rpn

    def ingest(self, beacon_id: int, rssi: float, mr: float) -> bool:
        """Store a reading if it is stronger than ``mr``.

        Returns:
            True if the reading was stored
        """

        fifo = self._fifo(beacon_id)

        if not rssi > mr:
            return False

        fifo.append(rssi)  # a full deque drops its oldest value

        return True


def ingest_packet(
    store: RssiHistoryStore, beacon_id: int, rssi: float, cfg: PipelineConfig
) -> RssiHistoryStore:
    if store.rpn != cfg.rpn:
        raise ValidationError(f"Store capacity {store.rpn} does not match rpn {cfg.rpn}")

    if not store.ingest(beacon_id, rssi, cfg.mr):
        logger.debug(f"Dropped packet from beacon {beacon_id}: {rssi} dBm <= {cfg.mr} dBm")

    return store


def history_weights(rpn: int) -> list[Fraction]:
    """Coefficients applied to a history of ``rpn`` readings, oldest first.

    The oldest reading shares the smallest weight with the second oldest, each newer reading
    doubles the weight, and the coefficients sum to exactly one.
    """

    if rpn < 1:
        raise ValidationError(f"rpn must be at least 1, got {rpn}")

    return [Fraction(1, 2 ** (rpn - 1))] + [Fraction(1, 2 ** (rpn - j)) for j in range(1, rpn)]


@functools.lru_cache(maxsize=None)
def _float_weights(rpn: int) -> tuple[float, ...]:
    return tuple(float(w) for w in history_weights(rpn))


def current_rssi(history: Sequence[float], rpn: int) -> float:
    if len(history) != rpn:
        raise HistoryNotFullError(len(history), rpn)

    weights = _float_weights(rpn)

    return math.fsum(w * value for w, value in zip(weights, history))


@attrs.frozen()
class ReliableBeacon:
    beacon_index: int
    measured_distance_cm: float
    current_rssi_dbm: float


def cap_reliable(beacons: Sequence[ReliableBeacon], limit: Optional[int]) -> list[ReliableBeacon]:
    """Keep the ``limit`` strongest beacons, preserving their original order."""

    if limit is None or len(beacons) <= limit:
        return list(beacons)

    ranked = sorted(range(len(beacons)), key=lambda i: (-beacons[i].current_rssi_dbm, i))
    kept = sorted(ranked[:limit])

    return [beacons[i] for i in kept]


def select_reliable(
    store: RssiHistoryStore, params: PathLossParams, cfg: PipelineConfig
) -> list[ReliableBeacon]:
    reliable = []

    for beacon_id in store.beacon_ids:
        if not store.is_full(beacon_id):
            continue

        rssi = current_rssi(store.history(beacon_id), store.rpn)

        if rssi > cfg.rr:
            reliable.append(ReliableBeacon(beacon_id, rssi_to_distance(params, rssi), rssi))

    selected = cap_reliable(reliable, cfg.max_reliable)
    logger.debug(f"{len(reliable)} beacons qualified, {len(selected)} selected")

    return selected
