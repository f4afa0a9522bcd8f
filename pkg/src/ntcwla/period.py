"""Localization period controller.

Every period records how many reliable beacons were available. After a fixed number of periods
the controller compares the shortage counters against their limits and lengthens the period when
beacons are scarce, or shortens it when none of the checked periods was short of beacons.
"""

from __future__ import annotations

import csv
import logging
from collections.abc import Iterable
from pathlib import Path
from typing import Final

import attrs

from .errors import ValidationError

PERIOD_TRACE_HEADER: Final[tuple[str, ...]] = ("check_index", "period_ms", "m_count", "n_count")

logger = logging.getLogger("ntcwla.period")
logger.addHandler(logging.NullHandler())


@attrs.frozen()
class PeriodConfig:
    """Constants of the period controller.

    Args:
        m_floor: Severe shortage threshold M, a period with fewer beacons counts towards m
        n_floor: Mild shortage threshold N, a period with fewer beacons counts towards n
        x_limit: Severe shortage periods tolerated per check
        y_limit: Mild shortage periods tolerated per check
        x_step_ms: Period increase after a severe shortage
        y_step_ms: Period increase after a mild shortage, and decrease when healthy
        check_every: Number of periods between checks
        min_period_ms: Lower bound of the period
        max_period_ms: Upper bound of the period
        initial_period_ms: Period before the first check
    """

    m_floor: int = attrs.field(default=3)
    n_floor: int = attrs.field(default=5)
    x_limit: int = attrs.field(default=2)
    y_limit: int = attrs.field(default=4)
    x_step_ms: int = attrs.field(default=500)
    y_step_ms: int = attrs.field(default=200)
    check_every: int = attrs.field(default=10)
    min_period_ms: int = attrs.field(default=200)
    max_period_ms: int = attrs.field(default=5000)
    initial_period_ms: int = attrs.field(default=1000)

    def __attrs_post_init__(self):
        if not self.m_floor < self.n_floor:
            raise ValueError(f"m_floor ({self.m_floor}) must be less than n_floor ({self.n_floor})")

        if not self.x_step_ms > self.y_step_ms > 0:
            raise ValueError("period steps must satisfy x_step_ms > y_step_ms > 0")

        if not self.min_period_ms > 0:
            raise ValueError(f"min_period_ms must be positive, got {self.min_period_ms}")

        if not self.min_period_ms <= self.initial_period_ms <= self.max_period_ms:
            raise ValueError("initial_period_ms must lie within [min_period_ms, max_period_ms]")

        if self.check_every < 1:
            raise ValueError(f"check_every must be at least 1, got {self.check_every}")

    def clamp(self, period_ms: int) -> int:
        return max(self.min_period_ms, min(self.max_period_ms, period_ms))


@attrs.frozen()
class PeriodState:
    period_ms: int
    m_count: int = 0
    n_count: int = 0
    periods_seen: int = 0

    @classmethod
    def initial(cls, cfg: PeriodConfig) -> PeriodState:
        return cls(cfg.initial_period_ms)


def record_period(state: PeriodState, am: int, cfg: PeriodConfig) -> PeriodState:
    """Count one period that had ``am`` reliable beacons."""

    if am < 0:
        raise ValidationError(f"reliable beacon count must be non-negative, got {am}")

    return attrs.evolve(
        state,
        periods_seen=state.periods_seen + 1,
        n_count=state.n_count + (am < cfg.n_floor),
        m_count=state.m_count + (am < cfg.m_floor),
    )


def adjust(state: PeriodState, cfg: PeriodConfig) -> PeriodState:
    period = state.period_ms

    if state.m_count > cfg.x_limit:
        period += cfg.x_step_ms
    elif state.n_count > cfg.y_limit:
        period += cfg.y_step_ms
    elif state.m_count == 0 and state.n_count == 0:
        period -= cfg.y_step_ms

    return PeriodState(cfg.clamp(period))


@attrs.frozen()
class PeriodCheck:
    check_index: int
    period_ms: int
    m_count: int
    n_count: int


@attrs.define()
class PeriodController:
    """Owns the period state of one mobile node and applies checks on schedule."""

    cfg: PeriodConfig = attrs.field(factory=PeriodConfig)
    state: PeriodState = attrs.field()
    checks: list[PeriodCheck] = attrs.field(factory=list)

    @state.default
    def _initial_state(self) -> PeriodState:
        return PeriodState.initial(self.cfg)

    @property
    def period_ms(self) -> int:
        return self.state.period_ms

    def observe(self, am: int) -> int:
        """Record a period and run the check when due.

        Returns:
            The period to use for the next localization
        """

        self.state = record_period(self.state, am, self.cfg)

        if self.state.periods_seen >= self.cfg.check_every:
            before = self.state
            self.state = adjust(before, self.cfg)
            self.checks.append(
                PeriodCheck(len(self.checks), self.state.period_ms, before.m_count, before.n_count)
            )

            logger.debug(
                f"Period check m={before.m_count} n={before.n_count}: "
                f"{before.period_ms} ms -> {self.state.period_ms} ms"
            )

        return self.state.period_ms


def write_period_trace(path: Path | str, checks: Iterable[PeriodCheck]):
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(PERIOD_TRACE_HEADER)

        for check in checks:
            writer.writerow([check.check_index, check.period_ms, check.m_count, check.n_count])
