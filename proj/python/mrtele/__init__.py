"""Python bindings for the mrtele teleoperation simulator."""

from ._mrtele import (  # noqa: F401
    SCHEMA_VERSION,
    ConfigError,
    FitFailure,
    FitResult,
    HillParams,
    IoError,
    ParseError,
    ProtocolError,
    SaturationError,
    collisions,
    fit_hill,
    forward_kinematics,
    hill_torque,
    inverse_hill,
    normalized_rmse,
    numeric_jacobian,
    parse_command,
    performance_metrics,
    run_scenario_file,
    semg_proxy,
    telemetry_text,
)

__version__ = "0.1.0"
