"""Utilities for the relay beamforming simulator"""
from .validators import (
    validate_dimensions,
    validate_powers,
    validate_multicast_order,
    validate_snr_grid,
    format_design_name,
)
from .errors import (
    SimulationError,
    SingularChannelError,
    OptimizerError,
    DegenerateBeamformerError,
    ConfigError,
)

__all__ = [
    "validate_dimensions",
    "validate_powers",
    "validate_multicast_order",
    "validate_snr_grid",
    "format_design_name",
    "SimulationError",
    "SingularChannelError",
    "OptimizerError",
    "DegenerateBeamformerError",
    "ConfigError",
]
