"""Data models for the relay beamforming simulator"""
from .schemas import (
    ChannelKind,
    ChannelModel,
    StrategyKind,
    Strategy,
    DecodingOrder,
    NetworkConfig,
    ZeroPattern,
    Design,
    BeamformerSet,
    RateReport,
    OptimizationMode,
    StopRule,
    OptimizerConfig,
    IterationRecord,
    OptimizationTrace,
    CancellationMode,
    BlockOutcome,
    SerResult,
    ExperimentKind,
    ExperimentSpec,
    ExperimentRow,
)

__all__ = [
    "ChannelKind",
    "ChannelModel",
    "StrategyKind",
    "Strategy",
    "DecodingOrder",
    "NetworkConfig",
    "ZeroPattern",
    "Design",
    "BeamformerSet",
    "RateReport",
    "OptimizationMode",
    "StopRule",
    "OptimizerConfig",
    "IterationRecord",
    "OptimizationTrace",
    "CancellationMode",
    "BlockOutcome",
    "SerResult",
    "ExperimentKind",
    "ExperimentSpec",
    "ExperimentRow",
]
