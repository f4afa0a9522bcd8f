from .__about__ import __version__
from .calibration import (
    CalibrationReport,
    CalibrationSample,
    FitCandidate,
    PathLossParams,
    calibrate,
    load_calibration_csv,
    rssi_to_distance,
    select_params,
    smooth_bins,
)
from .errors import LocalizationError, NtcwlaError, ValidationError
from .geometry import Circle, PairKind, Point2D, ReferenceCoordinate, TestArea, triple_reference
from .localizer import LocalizationResult, LocalizerConfig, localize
from .period import PeriodConfig, PeriodController, PeriodState, adjust, record_period
from .replay import PeriodEstimate, load_replay_csv, replay
from .rssi_pipeline import (
    PipelineConfig,
    ReliableBeacon,
    RssiHistoryStore,
    current_rssi,
    ingest_packet,
    select_reliable,
)
from .simulator import ChannelModel, SimConfig, StepRecord, error_stats, run_trace

__all__ = [
    "__version__",
    "CalibrationReport",
    "CalibrationSample",
    "ChannelModel",
    "Circle",
    "FitCandidate",
    "LocalizationError",
    "LocalizationResult",
    "LocalizerConfig",
    "NtcwlaError",
    "PairKind",
    "PathLossParams",
    "PeriodConfig",
    "PeriodController",
    "PeriodEstimate",
    "PeriodState",
    "PipelineConfig",
    "Point2D",
    "ReferenceCoordinate",
    "ReliableBeacon",
    "RssiHistoryStore",
    "SimConfig",
    "StepRecord",
    "TestArea",
    "ValidationError",
    "adjust",
    "calibrate",
    "current_rssi",
    "error_stats",
    "ingest_packet",
    "load_calibration_csv",
    "load_replay_csv",
    "localize",
    "record_period",
    "replay",
    "rssi_to_distance",
    "run_trace",
    "select_params",
    "select_reliable",
    "smooth_bins",
    "triple_reference",
]
