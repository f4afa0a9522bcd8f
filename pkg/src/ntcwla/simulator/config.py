"""Simulation documents.

A simulation document is a JSON object describing the beacon layout, the channel, the mobile
node trace and the options of every pipeline stage. Positions are given in meters and converted
to centimeters on load; every other length carries its unit in its name.
"""

from __future__ import annotations

import copy
import json
from collections.abc import Iterable, Mapping
from importlib import resources
from pathlib import Path
from typing import Any, Callable, Final, Optional, TypeVar

import attrs

from ..calibration import PathLossParams, load_params
from ..errors import ValidationError
from ..geometry import Point2D, TestArea
from ..localizer import LocalizerConfig
from ..period import PeriodConfig
from ..rssi_pipeline import PipelineConfig
from .channel import ChannelModel, analytic_params
from .trace import TraceKind, TraceSpec

CM_PER_M: Final[float] = 100.0
BUNDLED: Final[tuple[str, ...]] = ("experiment1", "experiment2", "rpn_sweep")

T = TypeVar("T")


class ConfigError(ValidationError):
    def __init__(self, path: str, reason: str):
        super().__init__(f"{path or '<root>'}: {reason}")
        self.path = path


@attrs.frozen()
class BeaconSpec:
    id: int
    position: Point2D


def _check_beacons(beacons: tuple[BeaconSpec, ...]):
    if len(beacons) < 3:
        raise ConfigError("beacons", f"at least 3 beacons are required, got {len(beacons)}")

    ids = [b.id for b in beacons]

    if len(set(ids)) != len(ids):
        raise ConfigError("beacons", "beacon ids must be unique")

    positions = [b.position for b in beacons]

    if len(set(positions)) != len(positions):
        raise ConfigError("beacons", "beacon positions must be distinct")


@attrs.frozen()
class LayoutConfig:
    """The parts of a simulation document that describe the deployment, without a trace.

    Replaying recorded packets only needs these.
    """

    beacons: tuple[BeaconSpec, ...] = attrs.field(converter=tuple)
    area: TestArea
    channel: ChannelModel = attrs.field(factory=ChannelModel)
    pipeline: PipelineConfig = attrs.field(factory=PipelineConfig, kw_only=True)
    localizer: LocalizerConfig = attrs.field(factory=LocalizerConfig, kw_only=True)
    period: PeriodConfig = attrs.field(factory=PeriodConfig, kw_only=True)
    n_cap: Optional[int] = attrs.field(default=None, kw_only=True)
    params: Optional[PathLossParams] = attrs.field(default=None, kw_only=True)

    def __attrs_post_init__(self):
        _check_beacons(self.beacons)

        if self.n_cap is not None and self.n_cap < 1:
            raise ConfigError("n_cap", "must be at least 1")

    def beacon_positions(self) -> dict[int, Point2D]:
        return {b.id: b.position for b in self.beacons}

    def path_loss_params(self) -> PathLossParams:
        return self.params if self.params is not None else analytic_params(self.channel)

    @property
    def reliable_cap(self) -> Optional[int]:
        return self.n_cap if self.n_cap is not None else self.pipeline.max_reliable


@attrs.frozen()
class SimConfig(LayoutConfig):
    """Everything needed to run one simulated trace.

    Args:
        beacons: Beacon ids and positions (cm)
        area: The test area (cm)
        channel: Channel model generating the readings
        trace: Trace of the mobile node
        pipeline: Packet pipeline thresholds
        localizer: Fusion options
        period: Period controller constants
        n_cap: Cap on reliable beacons per period, overriding ``pipeline.max_reliable``
        params: Empirical-formula parameters; derived from the channel when missing
        packets_per_beacon_per_period: Packets every beacon sends in one period
        rng_seed: Seed of the random generator
        max_steps: Optional bound on the number of periods
    """

    trace: TraceSpec = attrs.field(kw_only=True)
    packets_per_beacon_per_period: int = attrs.field(default=5, kw_only=True)
    rng_seed: int = attrs.field(default=0, kw_only=True)
    max_steps: Optional[int] = attrs.field(default=None, kw_only=True)

    def __attrs_post_init__(self):
        super().__attrs_post_init__()

        for i, point in enumerate(self.trace.points):
            if not self.area.contains(point, 1e-9):
                raise ConfigError(f"trace.points[{i}]", "waypoint lies outside the test area")

        if self.packets_per_beacon_per_period < 1:
            raise ConfigError("packets_per_beacon_per_period", "must be at least 1")


@attrs.frozen()
class Experiment:
    """A simulation document together with its sweep over history lengths, caps and seeds.

    A ``None`` entry in ``rpns`` keeps the history length configured in the document.
    """

    config: SimConfig
    n_caps: tuple[Optional[int], ...] = attrs.field(default=(None,), converter=tuple)
    trials: int = attrs.field(default=1)
    rpns: tuple[Optional[int], ...] = attrs.field(default=(None,), converter=tuple, kw_only=True)

    def seeds(self) -> list[int]:
        return [self.config.rng_seed + i for i in range(self.trials)]

    def _pipeline(self, rpn: Optional[int]) -> PipelineConfig:
        if rpn is None:
            return self.config.pipeline

        return attrs.evolve(self.config.pipeline, rpn=rpn)

    def runs(self) -> list[SimConfig]:
        return [
            attrs.evolve(self.config, pipeline=self._pipeline(rpn), n_cap=n_cap, rng_seed=seed)
            for rpn in self.rpns
            for n_cap in self.n_caps
            for seed in self.seeds()
        ]


def _expect(value: Any, kind: type | tuple[type, ...], path: str) -> Any:
    if isinstance(value, bool) or not isinstance(value, kind):
        names = kind.__name__ if isinstance(kind, type) else " or ".join(k.__name__ for k in kind)
        raise ConfigError(path, f"expected {names}, got {type(value).__name__}")

    return value


def _section(data: Mapping[str, Any], key: str, path: str) -> dict[str, Any]:
    value = data.get(key, {})
    return dict(_expect(value, dict, _join(path, key)))


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _point_m(value: Any, path: str) -> Point2D:
    _expect(value, list, path)

    if len(value) != 2:
        raise ConfigError(path, f"expected [x, y], got {len(value)} values")

    x, y = (_expect(v, (int, float), f"{path}[{i}]") for i, v in enumerate(value))

    return Point2D(x * CM_PER_M, y * CM_PER_M)


_JSON_TYPES: Final[dict[str, Any]] = {
    "int": int,
    "float": (int, float),
    "Optional[int]": int,
    "Optional[float]": (int, float),
}


def _build(factory: Callable[..., T], fields: Mapping[str, Any], path: str) -> T:
    names = {a.name.lstrip("_") for a in attrs.fields(factory)}  # type: ignore[arg-type]
    unknown = sorted(set(fields) - names)

    if unknown:
        raise ConfigError(_join(path, unknown[0]), "unknown field")

    types = {a.name.lstrip("_"): a.type for a in attrs.fields(factory)}  # type: ignore[arg-type]

    for key, value in fields.items():
        expected = _JSON_TYPES.get(str(types[key]))

        if expected is not None and value is not None:
            _expect(value, expected, _join(path, key))

    try:
        return factory(**fields)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise

        raise ConfigError(path, str(e)) from e


def _trace(data: Mapping[str, Any], path: str) -> TraceSpec:
    fields = dict(data)

    try:
        kind = TraceKind(fields.pop("kind", TraceKind.LINEAR_DIAGONAL.value))
    except ValueError:
        raise ConfigError(_join(path, "kind"), f"unknown trace kind {data.get('kind')!r}") from None

    if kind is TraceKind.LINEAR_DIAGONAL:
        keys = ("start", "end")
        points = [_point_m(fields.pop(k, None), _join(path, k)) for k in keys]
    elif kind is TraceKind.SQUARE_PERIMETER:
        keys = ("min", "max")
        points = [_point_m(fields.pop(k, None), _join(path, k)) for k in keys]
    else:
        raw = _expect(fields.pop("points", None), list, _join(path, "points"))
        points = [_point_m(p, f"{path}.points[{i}]") for i, p in enumerate(raw)]

    return _build(TraceSpec, {"kind": kind, "points": points, **fields}, path)


def _beacons(data: Any) -> list[BeaconSpec]:
    beacons = []

    for i, entry in enumerate(_expect(data, list, "beacons")):
        path = f"beacons[{i}]"
        entry = _expect(entry, dict, path)
        beacon_id = _expect(entry.get("id"), int, f"{path}.id")
        beacons.append(BeaconSpec(beacon_id, _point_m(entry.get("position"), f"{path}.position")))

    return beacons


def _params(data: Mapping[str, Any], base_dir: Optional[Path]) -> Optional[PathLossParams]:
    if "params" in data and data["params"] is not None:
        fields = _section(data, "params", "")
        return _build(PathLossParams, fields, "params")

    if "params_path" in data and data["params_path"] is not None:
        path = Path(_expect(data["params_path"], str, "params_path"))

        if not path.is_absolute() and base_dir is not None:
            path = base_dir / path

        return load_params(path)

    return None


_TOP_LEVEL: Final[frozenset[str]] = frozenset(
    {
        "beacons", "area", "channel", "trace", "pipeline", "localizer", "period", "params",
        "params_path", "packets_per_beacon_per_period", "rng_seed", "n_cap", "max_steps",
        "n_caps", "rpns", "trials", "name", "description",
    }
)


def _layout_fields(data: Mapping[str, Any], base_dir: Optional[Path]) -> dict[str, Any]:
    _expect(data, dict, "")
    unknown = sorted(set(data) - _TOP_LEVEL)

    if unknown:
        raise ConfigError(unknown[0], "unknown field")

    area = _section(data, "area", "")
    corners = (
        _point_m(area.get("min", [0.0, 0.0]), "area.min"),
        _point_m(area.get("max", [1.0, 1.0]), "area.max"),
    )

    try:
        test_area = TestArea(*corners)
    except ValueError as e:
        raise ConfigError("area", str(e)) from None

    fields: dict[str, Any] = {
        "beacons": _beacons(data.get("beacons")),
        "area": test_area,
        "channel": _build(ChannelModel, _section(data, "channel", ""), "channel"),
        "pipeline": _build(PipelineConfig, _section(data, "pipeline", ""), "pipeline"),
        "localizer": _build(LocalizerConfig, _section(data, "localizer", ""), "localizer"),
        "period": _build(PeriodConfig, _section(data, "period", ""), "period"),
        "params": _params(data, base_dir),
    }

    if data.get("n_cap") is not None:
        fields["n_cap"] = _expect(data["n_cap"], int, "n_cap")

    return fields


def layout_from_dict(data: Mapping[str, Any], base_dir: Optional[Path] = None) -> LayoutConfig:
    return LayoutConfig(**_layout_fields(data, base_dir))


def sim_config_from_dict(data: Mapping[str, Any], base_dir: Optional[Path] = None) -> SimConfig:
    fields = _layout_fields(data, base_dir)

    for key in ("packets_per_beacon_per_period", "rng_seed", "max_steps"):
        if data.get(key) is not None:
            fields[key] = _expect(data[key], int, key)

    return SimConfig(trace=_trace(_section(data, "trace", ""), "trace"), **fields)


def _int_list(data: Mapping[str, Any], key: str, minimum: int) -> Optional[list[int]]:
    if data.get(key) is None:
        return None

    values = []

    for i, value in enumerate(_expect(data[key], list, key)):
        if _expect(value, int, f"{key}[{i}]") < minimum:
            raise ConfigError(f"{key}[{i}]", f"must be at least {minimum}")

        values.append(value)

    if not values:
        raise ConfigError(key, "must not be empty")

    return values


def experiment_from_dict(data: Mapping[str, Any], base_dir: Optional[Path] = None) -> Experiment:
    config = sim_config_from_dict(data, base_dir)
    caps = _int_list(data, "n_caps", 1)
    rpns = _int_list(data, "rpns", 1)
    trials = data.get("trials", 1)

    if _expect(trials, int, "trials") < 1:
        raise ConfigError("trials", "must be at least 1")

    return Experiment(
        config,
        [config.n_cap] if caps is None else caps,
        trials,
        rpns=[None] if rpns is None else rpns,
    )


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(data: Mapping[str, Any], overrides: Iterable[str]) -> dict[str, Any]:
    """Set dotted-path keys, e.g. ``pipeline.rpn=5``, on a copy of a raw document."""

    result = copy.deepcopy(dict(data))

    for override in overrides:
        key, sep, text = override.partition("=")

        if not sep or not key:
            raise ConfigError(override, "override must have the form key=value")

        *parents, leaf = key.split(".")
        node = result

        for i, part in enumerate(parents):
            child = node.setdefault(part, {})

            if not isinstance(child, dict):
                raise ConfigError(".".join(parents[: i + 1]), "cannot override inside a non-object")

            node = child

        node[leaf] = _parse_value(text)

    return result


def read_document(source: Path | str) -> tuple[dict[str, Any], Optional[Path]]:
    """Read a simulation document from a file or by bundled name.

    Returns:
        The raw document and the directory relative paths inside it resolve against
    """

    if str(source) in BUNDLED:
        text = resources.files("ntcwla.resources").joinpath(f"{source}.json").read_text("utf-8")
        base_dir = None
    else:
        path = Path(source)

        try:
            text = path.read_text(encoding="utf-8")
        except FileNotFoundError:
            raise ConfigError("", f"configuration file {path} does not exist") from None

        base_dir = path.parent

    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError("", f"invalid JSON at line {e.lineno}: {e.msg}") from None

    return _expect(data, dict, ""), base_dir


def load_experiment(source: Path | str, overrides: Iterable[str] = ()) -> Experiment:
    data, base_dir = read_document(source)
    return experiment_from_dict(apply_overrides(data, overrides), base_dir)


def load_sim_config(source: Path | str, overrides: Iterable[str] = ()) -> SimConfig:
    data, base_dir = read_document(source)
    return sim_config_from_dict(apply_overrides(data, overrides), base_dir)


def load_layout(source: Path | str, overrides: Iterable[str] = ()) -> LayoutConfig:
    data, base_dir = read_document(source)
    return layout_from_dict(apply_overrides(data, overrides), base_dir)
