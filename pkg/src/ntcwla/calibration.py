"""Empirical path-loss formula fitting.

Field data are (distance, RSSI) pairs collected at fixed distances. The fit follows the usual
log-distance procedure: drop weak readings, average per distance, smooth the averaged series,
then fit ``P(d) = p1 * ln(d) + p2`` by least squares. Sweeping every odd smoothing width yields
a set of candidates from which the final parameters are selected.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import defaultdict
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any, Final

import attrs
import numpy as np

from .errors import ValidationError

DEFAULT_MR_FLOOR: Final[float] = -70.0
CSV_HEADER: Final[tuple[str, str]] = ("distance_cm", "rssi_dbm")

logger = logging.getLogger("ntcwla.calibration")
logger.addHandler(logging.NullHandler())


class CalibrationError(ValidationError):
    pass


class CalibrationFormatError(CalibrationError):
    def __init__(self, path: Path | str, line: int, reason: str):
        super().__init__(f"{path}:{line}: {reason}")
        self.path = Path(path)
        self.line = line


class EmptyCalibrationError(CalibrationError):
    def __init__(self, path: Path | str, dropped: int):
        super().__init__(
            f"empty result: no sample in {path} remains after filtering ({dropped} dropped)"
        )
        self.dropped = dropped


class SmoothError(CalibrationError):
    def __init__(self, smooth: int, count: int):
        super().__init__(f"smooth must be odd and within [1, {count}], got {smooth}")


class DegenerateFitError(CalibrationError):
    pass


class ParamsFormatError(CalibrationError):
    def __init__(self, path: Path | str, reason: str):
        super().__init__(f"{path}: {reason}")


def _positive(_: Any, attribute: attrs.Attribute, value: float):
    if not value > 0:
        raise ValueError(f"{attribute.name} must be positive, got {value}")


def _finite(_: Any, attribute: attrs.Attribute, value: float):
    if not math.isfinite(value):
        raise ValueError(f"{attribute.name} must be finite, got {value}")


def _negative(_: Any, attribute: attrs.Attribute, value: float):
    if not value < 0:
        raise ValueError(f"{attribute.name} must be negative, got {value}")


@attrs.frozen()
class CalibrationSample:
    """A single received packet at a known distance."""

    distance_cm: float = attrs.field(converter=float, validator=[_finite, _positive])
    rssi_dbm: float = attrs.field(converter=float, validator=_finite)


@attrs.frozen()
class DistanceBin:
    """Mean RSSI of every sample collected at one distance."""

    distance_cm: float = attrs.field(validator=_positive)
    mean_rssi_dbm: float = attrs.field(validator=_finite)
    sample_count: int = attrs.field(default=1)


@attrs.frozen()
class FitCandidate:
    smooth: int = attrs.field()
    p1: float = attrs.field(validator=[_finite, _negative])
    p2: float = attrs.field(validator=_finite)

    @smooth.validator
    def _check_smooth(self, _: attrs.Attribute, value: int):
        if value < 1 or value % 2 == 0:
            raise ValueError(f"smooth must be an odd positive integer, got {value}")


@attrs.frozen()
class PathLossParams:
    """Parameters of the empirical relation ``rssi = p1 * ln(distance_cm) + p2``.

    Args:
        p1: Slope in dBm per natural-log centimeter, always negative
        p2: Intercept in dBm (the RSSI at 1 cm)
    """

    p1: float = attrs.field(converter=float, validator=[_finite, _negative])
    p2: float = attrs.field(converter=float, validator=_finite)


def _parse_row(path: Path, line: int, row: list[str]) -> CalibrationSample:
    if len(row) != 2:
        raise CalibrationFormatError(path, line, f"expected 2 columns, found {len(row)}")

    try:
        return CalibrationSample(float(row[0]), float(row[1]))
    except ValueError as e:
        raise CalibrationFormatError(path, line, str(e)) from e


def load_calibration_csv(
    path: Path | str, mr_floor: float = DEFAULT_MR_FLOOR
) -> list[CalibrationSample]:
    """Read a ``distance_cm,rssi_dbm`` file, keeping samples strictly stronger than ``mr_floor``.

    Args:
        path: The calibration CSV file
        mr_floor: Samples with RSSI at or below this value (dBm) are dropped

    Returns:
        The surviving samples in file order
    """

    path = Path(path)

    if not path.is_file():
        raise CalibrationError(f"calibration file {path} does not exist")

    samples: list[CalibrationSample] = []
    dropped = 0

    with path.open(newline="", encoding="utf-8-sig") as file:
        for line, row in enumerate(csv.reader(file), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue

            if line == 1 and tuple(cell.strip() for cell in row) == CSV_HEADER:
                continue

            sample = _parse_row(path, line, row)

            if sample.rssi_dbm > mr_floor:
                samples.append(sample)
            else:
                dropped += 1

    logger.debug(f"Loaded {len(samples)} samples from {path}, dropped {dropped} below the floor")

    if not samples:
        raise EmptyCalibrationError(path, dropped)

    return samples


def write_calibration_csv(path: Path | str, samples: Iterable[CalibrationSample]):
    with Path(path).open("w", newline="", encoding="utf-8") as file:
        writer = csv.writer(file)
        writer.writerow(CSV_HEADER)

        for sample in samples:
            writer.writerow([repr(sample.distance_cm), repr(sample.rssi_dbm)])


def bin_by_distance(samples: Iterable[CalibrationSample]) -> list[DistanceBin]:
    groups: defaultdict[float, list[float]] = defaultdict(list)

    for sample in samples:
        groups[sample.distance_cm].append(sample.rssi_dbm)

    if not groups:
        raise CalibrationError("cannot bin an empty sample list")

    return [
        DistanceBin(distance, math.fsum(values) / len(values), len(values))
        for distance, values in sorted(groups.items())
    ]


def smooth_bins(bins: Sequence[DistanceBin], smooth: int) -> list[DistanceBin]:
    """Centered moving average of width ``smooth`` over the per-distance mean RSSI.

    Near the ends the window keeps only the neighbors that exist, so the first bin of a width-3
    window averages itself with its right neighbor.
    """

    count = len(bins)

    if smooth < 1 or smooth % 2 == 0 or smooth > count:
        raise SmoothError(smooth, count)

    ordered = sorted(bins, key=lambda b: b.distance_cm)
    means = [b.mean_rssi_dbm for b in ordered]
    half = smooth // 2
    smoothed = []

    for i, b in enumerate(ordered):
        window = means[max(0, i - half) : min(count, i + half + 1)]
        smoothed.append(attrs.evolve(b, mean_rssi_dbm=math.fsum(window) / len(window)))

    return smoothed


def fit_candidate(bins: Sequence[DistanceBin], smooth: int) -> FitCandidate:
    """Least-squares line through (ln distance, smoothed mean RSSI)."""

    if len(bins) < 2:
        raise DegenerateFitError(f"at least 2 distance bins are required, got {len(bins)}")

    smoothed = smooth_bins(bins, smooth)
    x = np.log([b.distance_cm for b in smoothed])
    y = np.array([b.mean_rssi_dbm for b in smoothed])

    if np.ptp(x) == 0:
        raise DegenerateFitError("all calibration distances are equal")

    p1, p2 = np.polyfit(x, y, 1)

    if not p1 < 0:
        raise DegenerateFitError(f"fitted slope {p1:.4f} is not negative for smooth={smooth}")

    return FitCandidate(smooth, float(p1), float(p2))


def sweep_candidates(bins: Sequence[DistanceBin]) -> list[FitCandidate]:
    """Fit one candidate for every odd smoothing width up to the number of bins.

    Widths whose fit is degenerate are skipped.

    Raises:
        DegenerateFitError: No width produced a usable fit
    """

    candidates: list[FitCandidate] = []
    errors: list[str] = []

    for smooth in range(1, len(bins) + 1, 2):
        try:
            candidates.append(fit_candidate(bins, smooth))
        except DegenerateFitError as e:
            logger.debug(f"Skipping smooth={smooth}: {e}")
            errors.append(str(e))

    if not candidates:
        reason = errors[-1] if errors else f"{len(bins)} distance bins"
        raise DegenerateFitError(f"no smoothing width gives a usable fit ({reason})")

    return candidates


def select_indices(candidates: Sequence[FitCandidate]) -> tuple[int, int]:
    """Indices of the candidate with minimal p1 and of the one with maximal p2.

    Ties go to the smallest smoothing width.
    """

    if not candidates:
        raise CalibrationError("no fit candidates to select from")

    indices = range(len(candidates))
    j = min(indices, key=lambda i: (candidates[i].p1, candidates[i].smooth))
    m = min(indices, key=lambda i: (-candidates[i].p2, candidates[i].smooth))

    return j, m


def select_params(candidates: Sequence[FitCandidate]) -> PathLossParams:
    j, m = select_indices(candidates)
    cj, cm = candidates[j], candidates[m]

    if j == m:
        return PathLossParams(cj.p1, cj.p2)

    return PathLossParams((cj.p1 + cm.p1) / 2, (cj.p2 + cm.p2) / 2)


def rssi_to_distance(params: PathLossParams, rssi: float) -> float:
    return math.exp((rssi - params.p2) / params.p1)


def distance_to_rssi(params: PathLossParams, distance_cm: float) -> float:
    return params.p1 * math.log(distance_cm) + params.p2


@attrs.frozen()
class MeasuredRow:
    """Measured distance and error of one actual distance under each candidate."""

    distance_cm: float
    measured_cm: tuple[float, ...]

    @property
    def errors_cm(self) -> tuple[float, ...]:
        return tuple(measured - self.distance_cm for measured in self.measured_cm)


def measured_distance_table(
    bins: Sequence[DistanceBin], candidates: Sequence[FitCandidate]
) -> list[MeasuredRow]:
    params = [PathLossParams(c.p1, c.p2) for c in candidates]

    return [
        MeasuredRow(b.distance_cm, tuple(rssi_to_distance(p, b.mean_rssi_dbm) for p in params))
        for b in sorted(bins, key=lambda b: b.distance_cm)
    ]


@attrs.frozen()
class CalibrationReport:
    bins: list[DistanceBin]
    candidates: list[FitCandidate]
    params: PathLossParams
    smooth_p1: int
    smooth_p2: int

    def table(self) -> list[MeasuredRow]:
        return measured_distance_table(self.bins, self.candidates)

    def to_json(self) -> dict[str, Any]:
        return {
            "p1": self.params.p1,
            "p2": self.params.p2,
            "smooth_p1": self.smooth_p1,
            "smooth_p2": self.smooth_p2,
        }


def calibrate(samples: Iterable[CalibrationSample]) -> CalibrationReport:
    """Run the full smoothing sweep and parameter selection over a set of samples."""

    bins = bin_by_distance(samples)
    candidates = sweep_candidates(bins)
    j, m = select_indices(candidates)
    params = select_params(candidates)

    logger.debug(
        f"Selected p1={params.p1:.6f} p2={params.p2:.6f} from smooth={candidates[j].smooth} "
        f"(min p1) and smooth={candidates[m].smooth} (max p2)"
    )

    return CalibrationReport(bins, candidates, params, candidates[j].smooth, candidates[m].smooth)


def save_params(path: Path | str, report: CalibrationReport):
    with Path(path).open("w", encoding="utf-8") as file:
        json.dump(report.to_json(), file, indent=2)


def params_from_json(data: Any, source: Path | str = "<params>") -> PathLossParams:
    if not isinstance(data, dict):
        raise ParamsFormatError(source, "expected a JSON object")

    try:
        return PathLossParams(data["p1"], data["p2"])
    except KeyError as e:
        raise ParamsFormatError(source, f"missing key {e.args[0]!r}") from e
    except (TypeError, ValueError) as e:
        raise ParamsFormatError(source, str(e)) from e


def load_params(path: Path | str) -> PathLossParams:
    path = Path(path)

    try:
        with path.open(encoding="utf-8") as file:
            data = json.load(file)
    except FileNotFoundError as e:
        raise ParamsFormatError(path, "file does not exist") from e
    except json.JSONDecodeError as e:
        raise ParamsFormatError(path, f"invalid JSON at line {e.lineno}") from e

    return params_from_json(data, path)
