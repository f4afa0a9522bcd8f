from __future__ import annotations

import csv
import json
import logging
import math
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Final, Optional

import attrs
import numpy as np

from ..errors import LocalizationError, ValidationError
from ..geometry import Point2D
from ..localizer import localize
from ..period import PeriodCheck, PeriodController
from ..rssi_pipeline import RssiHistoryStore, cap_reliable, ingest_packet, select_reliable
from .channel import generate_rssi_block
from .config import SimConfig

STEP_HEADER: Final[tuple[str, ...]] = (
    "time_s", "true_x_cm", "true_y_cm", "est_x_cm", "est_y_cm", "error_cm", "ann", "n_triples",
)
PACKET_HEADER: Final[tuple[str, ...]] = ("seq", "beacon_id", "rssi_dbm")

logger = logging.getLogger("ntcwla.simulator")
logger.addHandler(logging.NullHandler())


class NoEstimatesError(LocalizationError):
    def __init__(self, steps: int):
        super().__init__(f"all {steps} steps were skipped, no error statistics available")


class StepFormatError(ValidationError):
    def __init__(self, path: Path | str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")


@attrs.frozen()
class StepRecord:
    """Outcome of one localization period."""

    time_s: float
    true_position: Point2D
    estimate: Optional[Point2D]
    ann: int
    n_triples: int

    @property
    def error_cm(self) -> Optional[float]:
        if self.estimate is None:
            return None

        return self.true_position.distance_to(self.estimate)


@attrs.frozen()
class ErrorSummary:
    mean_cm: float
    rmse_cm: float
    max_cm: float
    skipped: int
    steps: int

    def to_json(self) -> dict[str, Any]:
        return attrs.asdict(self)


@attrs.frozen()
class PacketRow:
    seq: int
    beacon_id: Optional[int]
    rssi_dbm: Optional[float]

    @property
    def is_boundary(self) -> bool:
        return self.beacon_id is None


@attrs.frozen()
class TraceRun:
    config: SimConfig = attrs.field(repr=False)
    records: tuple[StepRecord, ...]
    checks: tuple[PeriodCheck, ...]
    packets: Optional[tuple[PacketRow, ...]] = attrs.field(default=None, repr=False)

    @property
    def summary(self) -> Optional[ErrorSummary]:
        try:
            return error_stats(self.records)
        except NoEstimatesError:
            return None


def error_stats(records: Sequence[StepRecord]) -> ErrorSummary:
    if not records:
        raise ValidationError("no step records to summarize")

    errors = np.array([r.error_cm for r in records if r.error_cm is not None], dtype=float)
    skipped = len(records) - errors.size

    if errors.size == 0:
        raise NoEstimatesError(len(records))

    return ErrorSummary(
        mean_cm=float(np.mean(errors)),
        rmse_cm=float(np.sqrt(np.mean(errors**2))),
        max_cm=float(np.max(errors)),
        skipped=skipped,
        steps=len(records),
    )


def run_trace(cfg: SimConfig, *, log_packets: bool = False) -> TraceRun:
    """Move the mobile node along its trace and localize it once per period.

    Each period every beacon sends its packets from the node's position at the period boundary,
    interleaved beacon by beacon. At the boundary the reliable beacons are selected, the node is
    localized and the period controller is updated with the number of qualifying beacons.
    """

    trace = cfg.trace.build()
    rng = np.random.default_rng(cfg.rng_seed)
    params = cfg.path_loss_params()
    positions = cfg.beacon_positions()
    ids = list(positions)
    centers = np.array([[p.x, p.y] for p in positions.values()])
    uncapped = attrs.evolve(cfg.pipeline, max_reliable=None)
    store = RssiHistoryStore.create(ids, cfg.pipeline.rpn)
    controller = PeriodController(cfg.period)
    packets: list[PacketRow] = []
    records: list[StepRecord] = []
    duration_ms = trace.duration_s * 1000
    time_ms = 0

    while time_ms <= duration_ms + 1e-6:
        if cfg.max_steps is not None and len(records) >= cfg.max_steps:
            break

        true = trace.position(time_ms / 1000)
        distances = np.maximum(
            np.hypot(centers[:, 0] - true.x, centers[:, 1] - true.y), cfg.channel.min_distance_cm
        )
        block = generate_rssi_block(distances, cfg.channel, rng, cfg.packets_per_beacon_per_period)

        for j in range(block.shape[1]):
            for beacon_id, rssi in zip(ids, block[:, j]):
                ingest_packet(store, beacon_id, float(rssi), cfg.pipeline)

                if log_packets:
                    packets.append(PacketRow(len(packets), beacon_id, float(rssi)))

        if log_packets:
            packets.append(PacketRow(len(packets), None, None))

        qualifying = select_reliable(store, params, uncapped)
        reliable = cap_reliable(qualifying, cfg.reliable_cap)

        try:
            estimate: Optional[Point2D] = localize(
                reliable, positions, cfg.area, cfg.localizer
            ).estimate
        except LocalizationError as e:
            logger.debug(f"t={time_ms / 1000:.3f}s: {e}")
            estimate = None

        records.append(
            StepRecord(time_ms / 1000, true, estimate, len(reliable), math.comb(len(reliable), 3))
        )
        time_ms += controller.observe(len(qualifying))

    logger.debug(f"Trace finished after {len(records)} periods (seed {cfg.rng_seed})")

    return TraceRun(
        cfg, tuple(records), tuple(controller.checks), tuple(packets) if log_packets else None
    )


def run_trials(
    configs: Sequence[SimConfig], workers: Optional[int] = None, *, log_packets: bool = False
) -> list[TraceRun]:
    """Run independent trials, in parallel when ``workers`` allows, keeping input order."""

    if workers == 1 or len(configs) <= 1:
        return [run_trace(cfg, log_packets=log_packets) for cfg in configs]

    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_trace_logged if log_packets else run_trace, configs))


def _run_trace_logged(cfg: SimConfig) -> TraceRun:
    return run_trace(cfg, log_packets=True)


@attrs.frozen()
class CapComparison:
    """Errors of one reliable-beacon cap and history length averaged over seeds."""

    n_cap: Optional[int]
    mean_cm: float
    rmse_cm: float
    max_cm: float
    skipped: int
    runs: int
    run_means_cm: tuple[float, ...] = attrs.field(repr=False)
    rpn: Optional[int] = attrs.field(default=None, kw_only=True)

    def to_json(self) -> dict[str, Any]:
        return {
            "rpn": self.rpn,
            "n_cap": self.n_cap,
            "mean_cm": _finite_or_none(self.mean_cm),
            "rmse_cm": _finite_or_none(self.rmse_cm),
            "max_cm": _finite_or_none(self.max_cm),
            "skipped": self.skipped,
            "runs": self.runs,
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> CapComparison:
        def number(key: str) -> float:
            value = data[key]
            return math.nan if value is None else float(value)

        return cls(
            data["n_cap"],
            number("mean_cm"),
            number("rmse_cm"),
            number("max_cm"),
            int(data["skipped"]),
            int(data["runs"]),
            (),
            rpn=data.get("rpn"),
        )


def _finite_or_none(value: float) -> Optional[float]:
    return value if math.isfinite(value) else None


def summarize_caps(runs: Iterable[TraceRun]) -> list[CapComparison]:
    """Group runs by history length and cap, in order of first appearance."""

    groups: dict[tuple[int, Optional[int]], list[ErrorSummary]] = {}

    for run in runs:
        summary = run.summary
        key = (run.config.pipeline.rpn, run.config.reliable_cap)
        bucket = groups.setdefault(key, [])

        if summary is not None:
            bucket.append(summary)

    rows = []

    for (rpn, n_cap), summaries in groups.items():
        if not summaries:
            rows.append(CapComparison(n_cap, math.nan, math.nan, math.nan, 0, 0, (), rpn=rpn))
            continue

        means = tuple(s.mean_cm for s in summaries)
        rows.append(
            CapComparison(
                n_cap,
                float(np.mean(means)),
                float(np.mean([s.rmse_cm for s in summaries])),
                max(s.max_cm for s in summaries),
                sum(s.skipped for s in summaries),
                len(summaries),
                means,
                rpn=rpn,
            )
        )

    return rows


def compare_n_caps(
    cfg: SimConfig, caps: Iterable[int], seeds: Iterable[int], workers: Optional[int] = 1
) -> list[CapComparison]:
    seeds = list(seeds)
    configs = [attrs.evolve(cfg, n_cap=cap, rng_seed=seed) for cap in caps for seed in seeds]

    return summarize_caps(run_trials(configs, workers))


def compare_rpns(
    cfg: SimConfig, rpns: Iterable[int], seeds: Iterable[int], workers: Optional[int] = 1
) -> list[CapComparison]:
    """Localization error for each number of packets averaged per beacon."""

    seeds = list(seeds)
    configs = [
        attrs.evolve(cfg, pipeline=attrs.evolve(cfg.pipeline, rpn=rpn), rng_seed=seed)
        for rpn in rpns
        for seed in seeds
    ]

    return summarize_caps(run_trials(configs, workers))


def format_comparison(rows: Iterable[CapComparison]) -> str:
    lines = [
        f"{'rpn':>4} {'n':>4} {'mean_cm':>10} {'rmse_cm':>10} {'max_cm':>10} "
        f"{'skipped':>8} {'runs':>5}"
    ]

    for row in rows:
        rpn = "-" if row.rpn is None else str(row.rpn)
        cap = "-" if row.n_cap is None else str(row.n_cap)
        lines.append(
            f"{rpn:>4} {cap:>4} {row.mean_cm:>10.3f} {row.rmse_cm:>10.3f} {row.max_cm:>10.3f} "
            f"{row.skipped:>8} {row.runs:>5}"
        )

    return "\n".join(lines)


def _cell(value: Optional[float]) -> str:
    return "" if value is None else repr(float(value))


def write_steps_csv(path: Path | str, records: Iterable[StepRecord]):
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(STEP_HEADER)

        for r in records:
            est = r.estimate
            writer.writerow(
                [
                    repr(r.time_s),
                    repr(r.true_position.x),
                    repr(r.true_position.y),
                    _cell(est.x if est else None),
                    _cell(est.y if est else None),
                    _cell(r.error_cm),
                    r.ann,
                    r.n_triples,
                ]
            )


def read_steps_csv(path: Path | str) -> list[StepRecord]:
    path = Path(path)
    records = []

    with path.open(newline="", encoding="utf-8") as file:
        reader = csv.reader(file)
        header = next(reader, None)

        if header is None or tuple(header) != STEP_HEADER:
            raise StepFormatError(path, 1, f"expected header {','.join(STEP_HEADER)}")

        for line, row in enumerate(reader, start=2):
            if len(row) != len(STEP_HEADER):
                raise StepFormatError(path, line, f"expected {len(STEP_HEADER)} columns")

            try:
                estimate = Point2D(float(row[3]), float(row[4])) if row[3] else None
                records.append(
                    StepRecord(
                        float(row[0]),
                        Point2D(float(row[1]), float(row[2])),
                        estimate,
                        int(row[6]),
                        int(row[7]),
                    )
                )
            except ValueError as e:
                raise StepFormatError(path, line, str(e)) from e

    return records


def write_packet_log(path: Path | str, packets: Iterable[PacketRow]):
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(PACKET_HEADER)

        for p in packets:
            if p.is_boundary:
                writer.writerow([p.seq, "PERIOD", "-"])
            else:
                writer.writerow([p.seq, p.beacon_id, repr(p.rssi_dbm)])


def write_summary_json(path: Path | str, document: dict[str, Any]):
    with Path(path).open("w", encoding="utf-8") as file:
        json.dump(document, file, indent=2)
