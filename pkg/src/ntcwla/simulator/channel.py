"""Log-distance channel model used to synthesize RSSI readings."""

from __future__ import annotations

import math
from collections.abc import Iterable
from typing import Any

import attrs
import numpy as np
import numpy.typing as npt

from ..calibration import CalibrationSample, PathLossParams
from ..errors import ValidationError


def _non_negative(_: Any, attribute: attrs.Attribute, value: float):
    if value < 0:
        raise ValueError(f"{attribute.name} must be non-negative, got {value}")


def _positive(_: Any, attribute: attrs.Attribute, value: float):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


@attrs.frozen()
class ChannelModel:
    """Received power ``P(d) = P(d0) - 10 * eta * log10(d / d0) - zeta`` plus packet noise.

    The defaults reproduce a 1 m x 1 m indoor desk setup whose empirical fit is
    ``p1 = -11.355``, ``p2 = 7.163``.

    Args:
        d0_cm: Reference distance
        p_d0_dbm: Received power at the reference distance
        eta: Path-loss exponent
        zeta_mean_dbm: Mean of the environment attenuation
        zeta_std_dbm: Standard deviation of the environment attenuation
        noise_std_dbm: Standard deviation of the per-packet noise
        min_distance_cm: Floor applied to distances so a node on top of a beacon stays finite
    """

    d0_cm: float = attrs.field(default=10.0, converter=float, validator=_positive)
    p_d0_dbm: float = attrs.field(default=-18.983, converter=float)
    eta: float = attrs.field(default=2.6146, converter=float, validator=_positive)
    zeta_mean_dbm: float = attrs.field(default=0.0, converter=float)
    zeta_std_dbm: float = attrs.field(default=0.0, converter=float, validator=_non_negative)
    noise_std_dbm: float = attrs.field(default=2.0, converter=float, validator=_non_negative)
    min_distance_cm: float = attrs.field(default=1e-9, converter=float, validator=_positive)

    def mean_rssi(self, distance_cm: npt.ArrayLike) -> np.ndarray:
        d = np.asarray(distance_cm, dtype=float)
        return self.p_d0_dbm - 10 * self.eta * np.log10(d / self.d0_cm) - self.zeta_mean_dbm


def generate_rssi(distance_cm: float, channel: ChannelModel, rng: np.random.Generator) -> float:
    if not distance_cm > 0:
        raise ValidationError(f"distance must be positive, got {distance_cm}")

    zeta = rng.normal(channel.zeta_mean_dbm, channel.zeta_std_dbm)
    noise = rng.normal(0.0, channel.noise_std_dbm)
    path_loss = 10 * channel.eta * math.log10(distance_cm / channel.d0_cm)

    return float(channel.p_d0_dbm - path_loss - zeta - noise)


def generate_rssi_block(
    distances_cm: npt.ArrayLike, channel: ChannelModel, rng: np.random.Generator, packets: int
) -> np.ndarray:
    """Draw ``packets`` readings for every distance at once.

    Returns:
        Array of shape ``(len(distances_cm), packets)``
    """

    d = np.asarray(distances_cm, dtype=float)

    if np.any(d <= 0):
        raise ValidationError("distances must be positive")

    shape = (d.size, packets)
    zeta = rng.normal(channel.zeta_mean_dbm, channel.zeta_std_dbm, size=shape)
    noise = rng.normal(0.0, channel.noise_std_dbm, size=shape)
    path_loss = 10 * channel.eta * np.log10(d / channel.d0_cm)

    return channel.p_d0_dbm - path_loss[:, np.newaxis] - zeta - noise


def analytic_params(channel: ChannelModel) -> PathLossParams:
    """Empirical-formula parameters that invert the channel's mean exactly."""

    return PathLossParams(
        -10 * channel.eta / math.log(10),
        channel.p_d0_dbm + 10 * channel.eta * math.log10(channel.d0_cm) - channel.zeta_mean_dbm,
    )


def calibration_samples(
    channel: ChannelModel,
    rng: np.random.Generator,
    distances_cm: Iterable[float] = range(10, 151, 10),
    packets_per_distance: int = 60,
    beacons: int = 4,
) -> list[CalibrationSample]:
    """Synthesize a calibration campaign.

    Several beacons are moved away from a fixed receiver in equal steps, each one transmitting a
    fixed number of packets at every stop.
    """

    distances = np.asarray(list(distances_cm), dtype=float)
    readings = generate_rssi_block(
        np.repeat(distances, beacons), channel, rng, packets_per_distance
    )

    return [
        CalibrationSample(distance, rssi)
        for distance, row in zip(np.repeat(distances, beacons), readings)
        for rssi in row
    ]
