from .channel import (
    ChannelModel,
    analytic_params,
    calibration_samples,
    generate_rssi,
    generate_rssi_block,
)
from .config import (
    BeaconSpec,
    ConfigError,
    Experiment,
    LayoutConfig,
    SimConfig,
    apply_overrides,
    experiment_from_dict,
    layout_from_dict,
    load_experiment,
    load_layout,
    load_sim_config,
    read_document,
    sim_config_from_dict,
)
from .simulation import (
    CapComparison,
    ErrorSummary,
    NoEstimatesError,
    PacketRow,
    StepRecord,
    TraceRun,
    compare_n_caps,
    compare_rpns,
    error_stats,
    format_comparison,
    read_steps_csv,
    run_trace,
    run_trials,
    summarize_caps,
    write_packet_log,
    write_steps_csv,
    write_summary_json,
)
from .trace import LinearDiagonal, SquarePerimeter, Trace, TraceKind, TraceSpec, Waypoints

__all__ = [
    "BeaconSpec",
    "CapComparison",
    "ChannelModel",
    "ConfigError",
    "ErrorSummary",
    "Experiment",
    "LayoutConfig",
    "LinearDiagonal",
    "NoEstimatesError",
    "PacketRow",
    "SimConfig",
    "SquarePerimeter",
    "StepRecord",
    "Trace",
    "TraceKind",
    "TraceRun",
    "TraceSpec",
    "Waypoints",
    "analytic_params",
    "apply_overrides",
    "calibration_samples",
    "compare_n_caps",
    "compare_rpns",
    "error_stats",
    "experiment_from_dict",
    "format_comparison",
    "generate_rssi",
    "generate_rssi_block",
    "layout_from_dict",
    "load_experiment",
    "load_layout",
    "load_sim_config",
    "read_document",
    "read_steps_csv",
    "run_trace",
    "run_trials",
    "sim_config_from_dict",
    "summarize_caps",
    "write_packet_log",
    "write_steps_csv",
    "write_summary_json",
]
