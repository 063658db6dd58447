"""Exception types raised by the simulator"""
from typing import Optional


class SimulationError(Exception):
    """Base class for all simulator failures"""


class SingularChannelError(SimulationError, ValueError):
    """Channel (or a derived constraint system) is numerically rank deficient"""


class OptimizerError(SimulationError, RuntimeError):
    """Beamformer optimization could not produce a valid result"""


class DegenerateBeamformerError(SimulationError, ValueError):
    """Beamformer carries no power (or is not finite) and cannot meet the budget"""


class ConfigError(SimulationError, ValueError):
    """Invalid experiment configuration document"""

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        prefix = f"[{', '.join(location)}] " if location else ""
        super().__init__(f"{prefix}{message}")
