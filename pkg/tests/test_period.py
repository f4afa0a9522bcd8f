from __future__ import annotations

import csv
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ntcwla.errors import ValidationError
from ntcwla.period import (
    PERIOD_TRACE_HEADER,
    PeriodConfig,
    PeriodController,
    PeriodState,
    adjust,
    record_period,
    write_period_trace,
)

CFG = PeriodConfig()


def _feed(state: PeriodState, counts: list[int]) -> PeriodState:
    for am in counts:
        state = record_period(state, am, CFG)

    return state


class TestRecordPeriod:
    def test_severe_shortage_counts_twice(self):
        state = record_period(PeriodState(1000), 2, CFG)
        assert (state.m_count, state.n_count, state.periods_seen) == (1, 1, 1)

    def test_mild_shortage(self):
        state = record_period(PeriodState(1000), 4, CFG)
        assert (state.m_count, state.n_count) == (0, 1)

    def test_enough_beacons(self):
        state = record_period(PeriodState(1000), 5, CFG)
        assert (state.m_count, state.n_count) == (0, 0)

    def test_negative_count(self):
        with pytest.raises(ValidationError):
            record_period(PeriodState(1000), -1, CFG)


class TestAdjust:
    def test_severe_shortage_lengthens_most(self):
        state = _feed(PeriodState(1000), [0, 1, 2, 6, 6, 6, 6, 6, 6, 6])
        assert adjust(state, CFG).period_ms == 1500

    def test_mild_shortage(self):
        state = _feed(PeriodState(1000), [4, 4, 3, 4, 4, 6, 6, 6, 6, 6])
        assert adjust(state, CFG).period_ms == 1200

    def test_healthy_periods_shorten(self):
        state = _feed(PeriodState(1000), [5] * 10)
        assert adjust(state, CFG).period_ms == 800

    def test_within_limits_keeps_period(self):
        state = _feed(PeriodState(1000), [2, 4, 6, 6, 6, 6, 6, 6, 6, 6])
        assert adjust(state, CFG).period_ms == 1000

    def test_counters_reset(self):
        state = adjust(_feed(PeriodState(1000), [0] * 10), CFG)
        assert (state.m_count, state.n_count, state.periods_seen) == (0, 0, 0)

    def test_clamped_at_maximum(self):
        state = _feed(PeriodState(4800), [0] * 10)
        assert adjust(state, CFG).period_ms == 5000

    def test_clamped_at_minimum(self):
        assert adjust(PeriodState(300), CFG).period_ms == 200


class TestPeriodConfig:
    def test_floors_ordered(self):
        with pytest.raises(ValueError):
            PeriodConfig(m_floor=5, n_floor=5)

    def test_steps_ordered(self):
        with pytest.raises(ValueError):
            PeriodConfig(x_step_ms=200, y_step_ms=200)

    def test_initial_within_bounds(self):
        with pytest.raises(ValueError):
            PeriodConfig(initial_period_ms=100)

    @pytest.mark.parametrize("minimum", [0, -5000])
    def test_minimum_positive(self, minimum: int):
        with pytest.raises(ValueError, match="min_period_ms"):
            PeriodConfig(min_period_ms=minimum, initial_period_ms=200)

    def test_healthy_checks_settle_at_minimum(self):
        controller = PeriodController(PeriodConfig(min_period_ms=1, check_every=1))
        periods = [controller.observe(9) for _ in range(8)]

        assert periods[-1] == 1
        assert all(p > 0 for p in periods)


counts = st.lists(st.integers(0, 12), min_size=1, max_size=60)


@settings(max_examples=10_000, deadline=None)
@given(counts)
def test_period_stays_within_bounds(stream: list[int]):
    controller = PeriodController(CFG)

    for am in stream:
        assert CFG.min_period_ms <= controller.observe(am) <= CFG.max_period_ms


@settings(max_examples=10_000, deadline=None)
@given(counts)
def test_severe_count_never_exceeds_mild_count(stream: list[int]):
    state = PeriodState.initial(CFG)

    for am in stream:
        state = record_period(state, am, CFG)
        assert state.m_count <= state.n_count

        if state.periods_seen >= CFG.check_every:
            state = adjust(state, CFG)
            assert (state.m_count, state.n_count) == (0, 0)


@settings(max_examples=10_000, deadline=None)
@given(st.lists(st.integers(CFG.n_floor, 20), min_size=1, max_size=60))
def test_healthy_stream_never_lengthens(stream: list[int]):
    controller = PeriodController(CFG)
    previous = controller.period_ms

    for am in stream:
        current = controller.observe(am)
        assert current <= previous
        previous = current


class TestPeriodController:
    def test_checks_on_schedule(self):
        controller = PeriodController(CFG)
        periods = [controller.observe(5) for _ in range(25)]

        assert periods[:9] == [1000] * 9
        assert periods[9:19] == [800] * 10
        assert periods[19:] == [600] * 6
        assert [c.period_ms for c in controller.checks] == [800, 600]

    def test_check_records_counts_before_reset(self):
        controller = PeriodController(CFG)

        for am in [1] * 10:
            controller.observe(am)

        (check,) = controller.checks
        assert (check.check_index, check.period_ms, check.m_count, check.n_count) == (
            0,
            1500,
            10,
            10,
        )

    def test_custom_initial_period(self):
        controller = PeriodController(PeriodConfig(initial_period_ms=2000))
        assert controller.period_ms == 2000

    def test_trace_file(self, tmp_path: Path):
        controller = PeriodController(PeriodConfig(check_every=2))

        for am in (0, 0, 6, 6):
            controller.observe(am)

        write_period_trace(tmp_path / "periods.csv", controller.checks)

        with (tmp_path / "periods.csv").open(newline="") as file:
            rows = list(csv.reader(file))

        assert tuple(rows[0]) == PERIOD_TRACE_HEADER
        assert rows[1:] == [["0", "1000", "2", "2"], ["1", "800", "0", "0"]]
