from __future__ import annotations

import math

from ntcwla.geometry import Point2D, TestArea
from ntcwla.period import PeriodConfig
from ntcwla.simulator import BeaconSpec, ChannelModel, SimConfig, TraceKind, TraceSpec

DESK = TestArea(Point2D(0, 0), Point2D(100, 100))

# Corners plus one edge midpoint: no triple has both mirror points inside the desk
FIVE_BEACONS = (
    BeaconSpec(1, Point2D(0, 0)),
    BeaconSpec(2, Point2D(100, 0)),
    BeaconSpec(3, Point2D(0, 100)),
    BeaconSpec(4, Point2D(100, 100)),
    BeaconSpec(5, Point2D(50, 0)),
)

GRID_BEACONS = tuple(
    BeaconSpec(3 * row + col + 1, Point2D(50 * col, 50 * row))
    for row in range(3)
    for col in range(3)
)

FIXED_PERIOD = PeriodConfig(check_every=1_000_000)


def diagonal_trace(steps: int) -> TraceSpec:
    """Diagonal from (10, 10) to (90, 90) cm walked in exactly ``steps`` one-second periods."""

    start, end = Point2D(10, 10), Point2D(90, 90)
    length = start.distance_to(end)
    duration = steps - 1

    return TraceSpec(
        TraceKind.LINEAR_DIAGONAL,
        (start, end),
        speed_cm_per_s=length / duration,
        duration_s=float(duration),
    )


def diagonal_config(
    beacons: tuple[BeaconSpec, ...] = GRID_BEACONS,
    *,
    noise_std_dbm: float = 2.0,
    steps: int = 100,
    **options,
) -> SimConfig:
    return SimConfig(
        beacons,
        DESK,
        ChannelModel(noise_std_dbm=noise_std_dbm),
        trace=diagonal_trace(steps),
        period=FIXED_PERIOD,
        **options,
    )


def sign_test_p_value(wins: int, trials: int) -> float:
    """One-sided p-value of at least ``wins`` successes in ``trials`` fair coin flips."""

    return sum(math.comb(trials, k) for k in range(wins, trials + 1)) / 2**trials
