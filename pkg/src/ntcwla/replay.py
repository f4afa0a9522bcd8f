"""Offline localization from recorded packets.

A replay file lists received packets as ``seq,beacon_id,rssi_dbm`` rows. A row whose beacon id
is ``PERIOD`` closes the current localization period; packets after the last marker form a
final period of their own.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Iterator, Mapping
from pathlib import Path
from typing import Any, Final, Optional, TextIO

import attrs

from .calibration import PathLossParams
from .errors import LocalizationError, ValidationError
from .geometry import Point2D, TestArea
from .localizer import LocalizerConfig, localize
from .period import PeriodConfig, PeriodController
from .rssi_pipeline import (
    PipelineConfig,
    RssiHistoryStore,
    cap_reliable,
    ingest_packet,
    select_reliable,
)

REPLAY_HEADER: Final[tuple[str, str, str]] = ("seq", "beacon_id", "rssi_dbm")
PERIOD_MARKER: Final[str] = "PERIOD"

logger = logging.getLogger("ntcwla.replay")
logger.addHandler(logging.NullHandler())


class ReplayFormatError(ValidationError):
    def __init__(self, source: Path | str, line: int, reason: str):
        super().__init__(f"{source}:{line}: {reason}")
        self.line = line


class EmptyReplayError(ValidationError):
    def __init__(self, source: Path | str):
        super().__init__(f"{source} contains no packets")


@attrs.frozen()
class ReplayPacket:
    line: int
    beacon_id: int
    rssi_dbm: float


@attrs.frozen()
class ReplayPeriod:
    index: int
    packets: tuple[ReplayPacket, ...]


@attrs.frozen()
class ReplayLog:
    source: str
    periods: tuple[ReplayPeriod, ...]

    @property
    def packet_count(self) -> int:
        return sum(len(p.packets) for p in self.periods)


def _parse_packet(source: Path, line: int, row: list[str]) -> Optional[ReplayPacket]:
    if len(row) != 3:
        raise ReplayFormatError(source, line, f"expected 3 columns, found {len(row)}")

    seq, beacon, rssi = (cell.strip() for cell in row)

    try:
        int(seq)
    except ValueError:
        raise ReplayFormatError(source, line, f"invalid sequence number {seq!r}") from None

    if beacon == PERIOD_MARKER:
        return None

    try:
        return ReplayPacket(line, int(beacon), float(rssi))
    except ValueError as e:
        raise ReplayFormatError(source, line, str(e)) from None


def load_replay_csv(path: Path | str) -> ReplayLog:
    path = Path(path)

    if not path.is_file():
        raise ValidationError(f"replay file {path} does not exist")

    periods: list[ReplayPeriod] = []
    pending: list[ReplayPacket] = []

    with path.open(newline="", encoding="utf-8-sig") as file:
        for line, row in enumerate(csv.reader(file), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue

            if line == 1 and tuple(cell.strip() for cell in row) == REPLAY_HEADER:
                continue

            packet = _parse_packet(path, line, row)

            if packet is None:
                periods.append(ReplayPeriod(len(periods), tuple(pending)))
                pending = []
            else:
                pending.append(packet)

    if pending:
        periods.append(ReplayPeriod(len(periods), tuple(pending)))

    log = ReplayLog(str(path), tuple(periods))

    if log.packet_count == 0:
        raise EmptyReplayError(path)

    logger.debug(f"Loaded {log.packet_count} packets in {len(periods)} periods from {path}")

    return log


@attrs.frozen()
class PeriodEstimate:
    """Result of one replayed period; ``estimate`` is None when the period was skipped."""

    period: int
    estimate: Optional[Point2D]
    ann: int
    n_triples: int
    n_references: int = 0
    n_after_filter: int = 0
    beacons: tuple[int, ...] = ()
    next_period_ms: Optional[int] = None
    reason: Optional[str] = None

    def to_json(self) -> dict[str, Any]:
        document: dict[str, Any] = {
            "period": self.period,
            "estimate": None if self.estimate is None else [self.estimate.x, self.estimate.y],
            "ann": self.ann,
            "n_triples": self.n_triples,
            "n_references": self.n_references,
            "n_after_filter": self.n_after_filter,
            "beacons": list(self.beacons),
            "next_period_ms": self.next_period_ms,
        }

        if self.reason is not None:
            document["reason"] = self.reason

        return document

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> PeriodEstimate:
        estimate = data["estimate"]

        return cls(
            int(data["period"]),
            None if estimate is None else Point2D(float(estimate[0]), float(estimate[1])),
            int(data["ann"]),
            int(data["n_triples"]),
            int(data.get("n_references", 0)),
            int(data.get("n_after_filter", 0)),
            tuple(int(b) for b in data.get("beacons", ())),
            data.get("next_period_ms"),
            data.get("reason"),
        )


def replay(
    log: ReplayLog,
    beacon_positions: Mapping[int, Point2D],
    params: PathLossParams,
    area: TestArea,
    *,
    pipeline: Optional[PipelineConfig] = None,
    localizer: Optional[LocalizerConfig] = None,
    period: Optional[PeriodConfig] = None,
    n_cap: Optional[int] = None,
) -> Iterator[PeriodEstimate]:
    """Run the packet pipeline and the localizer over every recorded period.

    Histories carry over from one period to the next, as they do on a live node.
    """

    pipeline = pipeline or PipelineConfig()
    cap = n_cap if n_cap is not None else pipeline.max_reliable
    uncapped = attrs.evolve(pipeline, max_reliable=None)
    store = RssiHistoryStore.create(sorted(beacon_positions), pipeline.rpn)
    controller = PeriodController(period or PeriodConfig())

    for recorded in log.periods:
        for packet in recorded.packets:
            if packet.beacon_id not in beacon_positions:
                raise ReplayFormatError(
                    log.source, packet.line, f"unknown beacon id {packet.beacon_id}"
                )

            ingest_packet(store, packet.beacon_id, packet.rssi_dbm, pipeline)

        qualifying = select_reliable(store, params, uncapped)
        reliable = cap_reliable(qualifying, cap)
        next_period = controller.observe(len(qualifying))
        ann = len(reliable)

        try:
            result = localize(reliable, beacon_positions, area, localizer)
        except LocalizationError as e:
            logger.debug(f"Period {recorded.index}: {e}")
            yield PeriodEstimate(
                recorded.index,
                None,
                ann,
                math.comb(ann, 3),
                beacons=tuple(sorted(b.beacon_index for b in reliable)),
                next_period_ms=next_period,
                reason=str(e),
            )
            continue

        yield PeriodEstimate(
            recorded.index,
            result.estimate,
            result.ann,
            result.n_triples,
            result.n_references,
            result.n_after_filter,
            result.beacons_used,
            next_period,
        )


def write_estimates_jsonl(stream: TextIO, estimates: Iterable[PeriodEstimate]):
    for estimate in estimates:
        stream.write(json.dumps(estimate.to_json()) + "\n")


def read_estimates_jsonl(path: Path | str) -> list[PeriodEstimate]:
    path = Path(path)
    estimates = []

    with path.open(encoding="utf-8") as file:
        for line, text in enumerate(file, start=1):
            if not text.strip():
                continue

            try:
                estimates.append(PeriodEstimate.from_json(json.loads(text)))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError, IndexError) as e:
                raise ReplayFormatError(path, line, f"invalid estimate record: {e}") from None

    return estimates
