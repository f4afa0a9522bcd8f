from __future__ import annotations

import io
from pathlib import Path

import pytest
from support import DESK, FIVE_BEACONS

from ntcwla.calibration import PathLossParams, distance_to_rssi
from ntcwla.geometry import Point2D
from ntcwla.localizer import localize
from ntcwla.replay import (
    EmptyReplayError,
    PeriodEstimate,
    ReplayFormatError,
    load_replay_csv,
    read_estimates_jsonl,
    replay,
    write_estimates_jsonl,
)
from ntcwla.rssi_pipeline import PipelineConfig, RssiHistoryStore, ingest_packet, select_reliable

PARAMS = PathLossParams(-11.355, 7.163)
POSITIONS = {b.id: b.position for b in FIVE_BEACONS}
TRUE = Point2D(37, 61)
OFFSETS = (0.0, 1.5, -1.0, 0.5, -0.5)


def _packets(true: Point2D, offsets: tuple[float, ...] = OFFSETS) -> list[str]:
    rows = []

    for offset in offsets:
        for beacon_id, position in POSITIONS.items():
            rssi = distance_to_rssi(PARAMS, position.distance_to(true)) + offset
            rows.append(f"{beacon_id},{rssi!r}")

    return rows


def _write(path: Path, rows: list[str]) -> Path:
    lines = ["seq,beacon_id,rssi_dbm"]
    lines.extend(f"{seq},{row}" for seq, row in enumerate(rows))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    return path


class TestLoadReplayCsv:
    def test_periods_split_on_marker(self, tmp_path: Path):
        path = _write(tmp_path / "log.csv", ["1,-40", "2,-41", "PERIOD,-", "3,-42"])
        log = load_replay_csv(path)

        assert [len(p.packets) for p in log.periods] == [2, 1]
        assert log.packet_count == 3
        assert log.periods[1].packets[0].beacon_id == 3

    def test_byte_order_mark(self, tmp_path: Path):
        path = tmp_path / "log.csv"
        path.write_text("\ufeffseq,beacon_id,rssi_dbm\n0,1,-40\n", encoding="utf-8")

        assert load_replay_csv(path).packet_count == 1

    def test_empty_file(self, tmp_path: Path):
        path = _write(tmp_path / "log.csv", ["PERIOD,-"])

        with pytest.raises(EmptyReplayError):
            load_replay_csv(path)

    def test_malformed_row(self, tmp_path: Path):
        path = _write(tmp_path / "log.csv", ["1,-40", "2,loud"])

        with pytest.raises(ReplayFormatError) as info:
            load_replay_csv(path)

        assert info.value.line == 3

    def test_bad_sequence_number(self, tmp_path: Path):
        (tmp_path / "log.csv").write_text("x,1,-40\n", encoding="utf-8")

        with pytest.raises(ReplayFormatError, match="sequence"):
            load_replay_csv(tmp_path / "log.csv")

    def test_missing_file(self, tmp_path: Path):
        with pytest.raises(ValueError, match="does not exist"):
            load_replay_csv(tmp_path / "log.csv")


class TestReplay:
    def test_period_matches_direct_pipeline(self, tmp_path: Path):
        rows = _packets(TRUE)
        log = load_replay_csv(_write(tmp_path / "log.csv", rows))
        (result,) = replay(log, POSITIONS, PARAMS, DESK)

        cfg = PipelineConfig()
        store = RssiHistoryStore.create(sorted(POSITIONS), cfg.rpn)

        for row in rows:
            beacon_id, rssi = row.split(",")
            ingest_packet(store, int(beacon_id), float(rssi), cfg)

        expected = localize(select_reliable(store, PARAMS, cfg), POSITIONS, DESK)

        assert result.estimate == expected.estimate
        assert result.ann == 5
        assert result.n_triples == 10
        assert result.beacons == (1, 2, 3, 4, 5)
        assert result.reason is None

    def test_unfilled_period_is_skipped(self, tmp_path: Path):
        rows = _packets(TRUE, (0.0,)) + ["PERIOD,-"] + _packets(TRUE, (0.0,) * 4)
        log = load_replay_csv(_write(tmp_path / "log.csv", rows))
        estimates = list(replay(log, POSITIONS, PARAMS, DESK))

        assert [e.period for e in estimates] == [0, 1]
        assert estimates[0].estimate is None
        assert estimates[0].ann == 0
        assert "0 reliable beacons" in estimates[0].reason

        # Histories carry over, so the second period completes them
        assert estimates[1].estimate is not None
        assert estimates[1].estimate.distance_to(TRUE) < 1e-6

    def test_cap(self, tmp_path: Path):
        log = load_replay_csv(_write(tmp_path / "log.csv", _packets(TRUE)))
        (result,) = replay(log, POSITIONS, PARAMS, DESK, n_cap=3)

        assert result.ann == 3
        assert result.n_triples == 1

    def test_unknown_beacon(self, tmp_path: Path):
        log = load_replay_csv(_write(tmp_path / "log.csv", ["1,-40", "8,-40"]))

        with pytest.raises(ReplayFormatError, match="unknown beacon id 8") as info:
            list(replay(log, POSITIONS, PARAMS, DESK))

        assert info.value.line == 3


class TestEstimatesJsonl:
    def test_round_trip(self, tmp_path: Path):
        estimates = [
            PeriodEstimate(0, None, 2, 0, next_period_ms=1000, reason="too few"),
            PeriodEstimate(1, Point2D(12.5, 40.25), 5, 10, 9, 8, (1, 2, 3, 4, 5), 1000),
        ]

        with (tmp_path / "out.jsonl").open("w", encoding="utf-8") as file:
            write_estimates_jsonl(file, estimates)

        assert read_estimates_jsonl(tmp_path / "out.jsonl") == estimates

    def test_skip_record_has_null_estimate(self):
        stream = io.StringIO()
        write_estimates_jsonl(stream, [PeriodEstimate(3, None, 1, 0, reason="too few")])

        assert '"estimate": null' in stream.getvalue()
        assert '"reason": "too few"' in stream.getvalue()

    def test_invalid_line(self, tmp_path: Path):
        (tmp_path / "out.jsonl").write_text('{"period": 0}\n', encoding="utf-8")

        with pytest.raises(ReplayFormatError) as info:
            read_estimates_jsonl(tmp_path / "out.jsonl")

        assert info.value.line == 1
