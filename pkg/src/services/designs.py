"""Design name to beamformer-set dispatch"""
import logging
from typing import Callable, Dict, Optional

import numpy as np

from ..models.schemas import (
    NetworkConfig,
    BeamformerSet,
    Design,
    OptimizationMode,
    OptimizerConfig,
)
from ..utils.validators import format_design_name
from .baselines import zf_beamformer, mmse_beamformer, rzf_beamformer, mf_beamformer
from .pzf_optimizer import PZFOptimizer


logger = logging.getLogger(__name__)


def parse_design(name: str) -> Design:
    """
    Resolve a user-supplied design name

    Raises:
        ValueError: for unknown names
    """
    canonical = format_design_name(name)
    for design in Design:
        if design.value.upper() == canonical.upper():
            return design
    known = ", ".join(d.value for d in Design)
    raise ValueError(f"unknown design '{name}' (expected one of {known})")


def build_beamformers(
    design: Design,
    H: np.ndarray,
    config: NetworkConfig,
    rzf_alpha: float = 1.0,
    optimizer_options: Optional[Dict[OptimizationMode, OptimizerConfig]] = None,
    trace_callback=None
) -> BeamformerSet:
    """
    Relay matrices of every BC slot for one design

    PZF-Reduced eliminates dependent entries when M = N-1 and runs the
    separate scheme otherwise.

    Args:
        design: Beamformer design
        H: M x N channel matrix
        config: Network configuration
        rzf_alpha: RZF regularization
        optimizer_options: Per-mode ascent parameters
        trace_callback: Optional callback for tracing

    Returns:
        BeamformerSet tagged with the design name
    """
    design = Design(design)
    slots = range(1, config.n_users)

    if design == Design.ZF:
        matrices = [zf_beamformer(H, config, n) for n in slots]
    elif design == Design.MMSE:
        matrices = [mmse_beamformer(H, config, n) for n in slots]
    elif design == Design.RZF:
        matrices = [rzf_beamformer(H, config, n, rzf_alpha) for n in slots]
    elif design == Design.MF:
        matrices = [mf_beamformer(H, config, n) for n in slots]
    else:
        mode = {
            Design.PZF_JOINT: OptimizationMode.JOINT,
            Design.PZF_SEPARATE: OptimizationMode.SEPARATE,
            Design.PZF_REDUCED: OptimizationMode.REDUCED,
        }[design]
        options = (optimizer_options or {}).get(mode) or OptimizerConfig(mode=mode)
        optimizer = PZFOptimizer(config, options)

        if mode == OptimizationMode.REDUCED and config.n_antennas >= config.n_users:
            result = optimizer.optimize_separate(H, trace_callback)
        else:
            result = optimizer.optimize(H, trace_callback)
        result.design = design.value
        return result

    return BeamformerSet(matrices=matrices, design=design.value)


def design_factory(
    design: Design,
    rzf_alpha: float = 1.0,
    optimizer_options: Optional[Dict[OptimizationMode, OptimizerConfig]] = None
) -> Callable[[np.ndarray, NetworkConfig], BeamformerSet]:
    """Bind a design to a (H, config) -> BeamformerSet callable"""
    def factory(H: np.ndarray, config: NetworkConfig) -> BeamformerSet:
        return build_beamformers(design, H, config, rzf_alpha, optimizer_options)
    return factory
