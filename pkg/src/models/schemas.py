"""Data schemas for multi-way relay network simulation"""
import dataclasses
from dataclasses import dataclass, field
from typing import List, Optional, Dict, Any, Tuple, FrozenSet
from enum import Enum

import numpy as np

from ..utils.validators import (
    validate_dimensions,
    validate_powers,
    validate_multicast_order,
    validate_snr_grid,
)


class DecodingOrder(str, Enum):
    """Order in which a receiver decodes the other users' symbols"""
    CLOCKWISE = "clockwise"
    COUNTER_CLOCKWISE = "counterclockwise"


class StrategyKind(str, Enum):
    """Relay broadcast strategy"""
    UNICAST = "unicast"
    HYBRID = "hybrid"


class ChannelKind(str, Enum):
    """Channel variance model"""
    HOMOGENEOUS = "homogeneous"
    HETEROGENEOUS = "heterogeneous"


class Design(str, Enum):
    """Supported relay beamformer designs"""
    ZF = "ZF"
    MMSE = "MMSE"
    RZF = "RZF"
    MF = "MF"
    PZF_JOINT = "PZF-Joint"
    PZF_SEPARATE = "PZF-Separate"
    PZF_REDUCED = "PZF-Reduced"

    @property
    def is_pzf(self) -> bool:
        return self.value.startswith("PZF")


class OptimizationMode(str, Enum):
    """PZF optimization scheme"""
    JOINT = "joint"
    SEPARATE = "separate"
    REDUCED = "reduced"


class StopRule(str, Enum):
    """Termination rule of the modified gradient ascent"""
    IMPROVEMENT = "improvement"
    GRADIENT = "gradient"


class CancellationMode(str, Enum):
    """Source of the symbols used for successive interference cancellation"""
    REALISTIC = "realistic"
    GENIE = "genie"


class ExperimentKind(str, Enum):
    """Experiment families driven by the pipeline"""
    SUM_RATE = "sumrate"
    SER = "ser"
    USER_COUNT = "sweep-users"
    SCHEDULING = "schedule-compare"
    REDUCED = "reduced-compare"


def db_to_linear(value_db: float) -> float:
    return float(10.0 ** (value_db / 10.0))


@dataclass(frozen=True)
class ChannelModel:
    """Per-user Rayleigh channel variances"""
    kind: ChannelKind = ChannelKind.HOMOGENEOUS
    variance: float = 1.0
    distances: Tuple[float, ...] = ()
    psi: float = 1.0
    exponent: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))
        object.__setattr__(self, "distances", tuple(float(d) for d in self.distances))

        if self.kind == ChannelKind.HOMOGENEOUS:
            is_valid, msg = validate_powers([self.variance], "channel variance")
            if not is_valid:
                raise ValueError(msg)
        else:
            if not self.distances:
                raise ValueError("heterogeneous channel model requires distances")
            is_valid, msg = validate_powers(self.distances, "distance")
            if not is_valid:
                raise ValueError(msg)
            is_valid, msg = validate_powers([self.psi, self.exponent], "path-loss parameter")
            if not is_valid:
                raise ValueError(msg)

    @classmethod
    def homogeneous(cls, variance: float = 1.0) -> "ChannelModel":
        return cls(kind=ChannelKind.HOMOGENEOUS, variance=variance)

    @classmethod
    def heterogeneous(
        cls,
        distances: Tuple[float, ...],
        psi: float = 1.0,
        exponent: float = 2.0
    ) -> "ChannelModel":
        return cls(kind=ChannelKind.HETEROGENEOUS, distances=tuple(distances), psi=psi, exponent=exponent)

    def variances(self, n_users: int) -> np.ndarray:
        """Per-user variance sigma_i^2, (psi/d_i)^nu in the heterogeneous case"""
        if self.kind == ChannelKind.HOMOGENEOUS:
            return np.full(n_users, self.variance, dtype=float)
        if len(self.distances) != n_users:
            raise ValueError(
                f"expected {n_users} distances, got {len(self.distances)}"
            )
        return (self.psi / np.asarray(self.distances)) ** self.exponent

    def with_reference_snr(self, snr_linear: float) -> "ChannelModel":
        """
        Rescale so that user 1's SNR at the relay equals snr_linear

        With unit noise and unit transmit power the SNR of user i at the relay
        is sigma_i^2; the heterogeneous model keeps its distance ratios and
        moves psi so that sigma_1^2 = snr_linear.
        """
        if self.kind == ChannelKind.HOMOGENEOUS:
            return dataclasses.replace(self, variance=snr_linear)
        psi = self.distances[0] * snr_linear ** (1.0 / self.exponent)
        return dataclasses.replace(self, psi=psi)


@dataclass(frozen=True)
class Strategy:
    """Broadcast strategy; hybrid carries an explicit detection schedule"""
    kind: StrategyKind = StrategyKind.UNICAST
    unicast_source: Optional[int] = None
    multicast_order: Tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        object.__setattr__(self, "multicast_order", tuple(int(m) for m in self.multicast_order))
        if self.kind == StrategyKind.HYBRID and self.unicast_source is None:
            raise ValueError("hybrid strategy requires a unicast source")

    @classmethod
    def unicast(cls) -> "Strategy":
        return cls()

    @classmethod
    def hybrid(cls, unicast_source: int, multicast_order: Tuple[int, ...]) -> "Strategy":
        return cls(kind=StrategyKind.HYBRID, unicast_source=unicast_source, multicast_order=tuple(multicast_order))

    @property
    def label(self) -> str:
        if self.kind == StrategyKind.UNICAST:
            return "unicast"
        order = ",".join(str(m) for m in self.multicast_order)
        return f"hybrid:{self.unicast_source}:{order}"


@dataclass(frozen=True)
class NetworkConfig:
    """Complete description of one multi-way relay network"""
    n_users: int
    n_antennas: int
    user_powers: Tuple[float, ...]
    relay_power: float = 1.0
    channel: ChannelModel = field(default_factory=ChannelModel)
    strategy: Strategy = field(default_factory=Strategy)
    decoding_order: DecodingOrder = DecodingOrder.CLOCKWISE

    def __post_init__(self):
        """Validate data"""
        is_valid, msg = validate_dimensions(self.n_users, self.n_antennas)
        if not is_valid:
            raise ValueError(msg)

        object.__setattr__(self, "user_powers", tuple(float(p) for p in self.user_powers))
        object.__setattr__(self, "decoding_order", DecodingOrder(self.decoding_order))

        if len(self.user_powers) != self.n_users:
            raise ValueError(
                f"expected {self.n_users} user powers, got {len(self.user_powers)}"
            )
        is_valid, msg = validate_powers(self.user_powers, "user power")
        if not is_valid:
            raise ValueError(msg)
        is_valid, msg = validate_powers([self.relay_power], "relay power")
        if not is_valid:
            raise ValueError(msg)

        if self.channel.kind == ChannelKind.HETEROGENEOUS and len(self.channel.distances) != self.n_users:
            raise ValueError(
                f"expected {self.n_users} distances, got {len(self.channel.distances)}"
            )

        if self.strategy.kind == StrategyKind.HYBRID:
            is_valid, msg = validate_multicast_order(
                self.n_users, self.strategy.unicast_source, self.strategy.multicast_order
            )
            if not is_valid:
                raise ValueError(msg)

    @classmethod
    def homogeneous(
        cls,
        n_users: int,
        n_antennas: int,
        snr_db: float = 10.0,
        user_power: float = 1.0,
        relay_power: float = 1.0,
        **kwargs
    ) -> "NetworkConfig":
        """Equal powers and i.i.d. channels with variance 10^(snr_db/10)"""
        return cls(
            n_users=n_users,
            n_antennas=n_antennas,
            user_powers=(user_power,) * n_users,
            relay_power=relay_power,
            channel=ChannelModel.homogeneous(db_to_linear(snr_db)),
            **kwargs
        )

    @property
    def n_slots(self) -> int:
        return self.n_users - 1

    @property
    def power_array(self) -> np.ndarray:
        return np.asarray(self.user_powers, dtype=float)

    def variances(self) -> np.ndarray:
        return self.channel.variances(self.n_users)

    def with_snr_db(self, snr_db: float) -> "NetworkConfig":
        """Same network with the (reference user's) SNR at the relay set to snr_db"""
        return dataclasses.replace(self, channel=self.channel.with_reference_snr(db_to_linear(snr_db)))

    def with_strategy(
        self,
        strategy: Strategy,
        decoding_order: Optional[DecodingOrder] = None
    ) -> "NetworkConfig":
        return dataclasses.replace(
            self,
            strategy=strategy,
            decoding_order=decoding_order if decoding_order is not None else self.decoding_order,
        )

    def resized(self, n_users: int, n_antennas: int) -> "NetworkConfig":
        """
        Same power and channel settings for a different network size

        Powers are taken from user 1; heterogeneous distances are extended
        geometrically (d_n = 2^(n-1) d_1) when the size changes.
        """
        channel = self.channel
        if channel.kind == ChannelKind.HETEROGENEOUS and len(channel.distances) != n_users:
            d1 = channel.distances[0]
            channel = dataclasses.replace(channel, distances=tuple(d1 * 2 ** i for i in range(n_users)))
        return NetworkConfig(
            n_users=n_users,
            n_antennas=n_antennas,
            user_powers=(self.user_powers[0],) * n_users,
            relay_power=self.relay_power,
            channel=channel,
            decoding_order=self.decoding_order,
        )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_users": self.n_users,
            "n_antennas": self.n_antennas,
            "user_powers": list(self.user_powers),
            "relay_power": self.relay_power,
            "channel": {
                "kind": self.channel.kind.value,
                "variance": self.channel.variance,
                "distances": list(self.channel.distances),
                "psi": self.channel.psi,
                "exponent": self.channel.exponent,
            },
            "strategy": self.strategy.label,
            "decoding_order": self.decoding_order.value,
        }


@dataclass(frozen=True)
class ZeroPattern:
    """Forced-zero entries (receiver i, interferer j, slot n) of the equivalent channels, 1-based"""
    n_users: int
    tuples: FrozenSet[Tuple[int, int, int]]

    def __post_init__(self):
        for i, j, n in self.tuples:
            if i == j:
                raise ValueError(f"self-interference entry ({i}, {j}, {n}) cannot be relay-cancelled")

    def __len__(self) -> int:
        return len(self.tuples)

    def __contains__(self, item) -> bool:
        return item in self.tuples

    def for_slot(self, n: int) -> FrozenSet[Tuple[int, int]]:
        return frozenset((i, j) for i, j, slot in self.tuples if slot == n)

    def mask(self, n: int) -> np.ndarray:
        """N x N boolean array, True at forced-zero positions of slot n"""
        zeros = np.zeros((self.n_users, self.n_users), dtype=bool)
        for i, j in self.for_slot(n):
            zeros[i - 1, j - 1] = True
        return zeros

    def free_mask(self, n: int) -> np.ndarray:
        return ~self.mask(n)

    def free_count(self, n: int) -> int:
        return self.n_users * self.n_users - len(self.for_slot(n))

    @property
    def total_free(self) -> int:
        return sum(self.free_count(n) for n in range(1, self.n_users))


@dataclass(eq=False)
class BeamformerSet:
    """Relay matrices G^(1)..G^(N-1) for the broadcast slots"""
    matrices: List[np.ndarray]
    design: str
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("beamformer set cannot be empty")
        size = self.matrices[0].shape[0]
        for G in self.matrices:
            if G.shape != (size, size):
                raise ValueError(f"relay matrices must be {size}x{size} (got {G.shape})")

    def __len__(self) -> int:
        return len(self.matrices)

    def slot(self, n: int) -> np.ndarray:
        """Relay matrix of BC slot n (1-based)"""
        return self.matrices[n - 1]

    @property
    def iterations(self) -> Optional[int]:
        return self.metadata.get("iterations")


@dataclass(eq=False)
class RateReport:
    """Per-pair, per-source and network rates in bits per channel use"""
    pair_rates: np.ndarray
    common_rates: np.ndarray
    sum_rate: float

    def __post_init__(self):
        if np.any(self.pair_rates < 0) or np.any(self.common_rates < 0):
            raise ValueError("rates must be non-negative")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "pair_rates": self.pair_rates.tolist(),
            "common_rates": self.common_rates.tolist(),
            "sum_rate": self.sum_rate,
        }


@dataclass(frozen=True)
class OptimizerConfig:
    """Parameters of the modified gradient ascent"""
    mode: OptimizationMode = OptimizationMode.SEPARATE
    step_size: Optional[float] = None
    fd_scale: float = 1e-5
    stop_rule: StopRule = StopRule.IMPROVEMENT
    improvement_threshold: float = 0.05
    gradient_tolerance: float = 1e-4
    max_iterations: int = 1000
    max_halvings: int = 20
    clamp_normalization: bool = False

    DEFAULT_STEPS = {"joint": 0.01, "separate": 0.03, "reduced": 0.03}

    def __post_init__(self):
        object.__setattr__(self, "mode", OptimizationMode(self.mode))
        object.__setattr__(self, "stop_rule", StopRule(self.stop_rule))
        if self.step_size is None:
            object.__setattr__(self, "step_size", self.DEFAULT_STEPS[self.mode.value])

        for name in ("step_size", "fd_scale", "improvement_threshold", "gradient_tolerance"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be > 0 (got {value})")
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1 (got {self.max_iterations})")
        if self.max_halvings < 0:
            raise ValueError(f"max_halvings must be >= 0 (got {self.max_halvings})")


@dataclass
class IterationRecord:
    """One committed iterate of an optimizer run"""
    iteration: int
    slot: Optional[int]
    objective: float
    power: float
    gradient_norm: float
    step: float

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class OptimizationTrace:
    """Convergence history of a PZF optimizer run"""
    mode: OptimizationMode
    records: List[IterationRecord] = field(default_factory=list)
    iterations: int = 0

    def objectives(self, slot: Optional[int] = None) -> List[float]:
        return [r.objective for r in self.records if slot is None or r.slot == slot]


@dataclass(eq=False)
class BlockOutcome:
    """Decode results for a batch of transmission blocks over one channel"""
    errors: np.ndarray
    blocks: int
    max_residual: float = 0.0

    @property
    def events(self) -> int:
        n = self.errors.shape[0]
        return self.blocks * n * (n - 1)


@dataclass(eq=False)
class SerResult:
    """Symbol-error statistics at one SNR point"""
    snr_db: float
    mode: CancellationMode
    per_user_ser: np.ndarray
    aggregate_ser: float
    errors: int
    events: int
    trials: int
    failures: int = 0
    channel_means: List[float] = field(default_factory=list)

    def __post_init__(self):
        if not 0.0 <= self.aggregate_ser <= 1.0:
            raise ValueError(f"SER must lie in [0, 1] (got {self.aggregate_ser})")
        if np.any(self.per_user_ser < 0) or np.any(self.per_user_ser > 1):
            raise ValueError("per-user SER must lie in [0, 1]")

    @property
    def binomial_stderr(self) -> float:
        if self.events == 0:
            return 0.0
        p = self.aggregate_ser
        return float(np.sqrt(p * (1.0 - p) / self.events))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "snr_db": self.snr_db,
            "mode": self.mode.value,
            "per_user_ser": self.per_user_ser.tolist(),
            "aggregate_ser": self.aggregate_ser,
            "errors": self.errors,
            "events": self.events,
            "trials": self.trials,
            "failures": self.failures,
        }


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully validated experiment description"""
    kind: ExperimentKind
    network: NetworkConfig
    designs: Tuple[Design, ...]
    snr_db: Tuple[float, ...]
    trials: int = 100
    seed: int = 0
    output: str = "results.csv"
    rzf_alpha: float = 1.0
    step_size_joint: float = 0.01
    step_size_separate: float = 0.03
    stop_rule: StopRule = StopRule.IMPROVEMENT
    improvement_threshold: float = 0.05
    gradient_tolerance: float = 1e-4
    max_iterations: int = 1000
    clamp_normalization: bool = False
    qam_order: int = 4
    blocks_per_channel: int = 200
    ser_modes: Tuple[CancellationMode, ...] = (CancellationMode.REALISTIC,)
    user_counts: Tuple[int, ...] = (3, 4, 5, 6, 7, 8)
    match_antennas: bool = False
    metric: str = "sum_rate"
    schedules: Tuple[str, ...] = ("unicast",)
    settings: Tuple[Tuple[int, int], ...] = ()
    defaults_applied: Tuple[str, ...] = ()
    preset: Optional[str] = None

    def __post_init__(self):
        if not self.designs:
            raise ValueError("design list cannot be empty")
        is_valid, msg = validate_snr_grid(self.snr_db)
        if not is_valid:
            raise ValueError(msg)
        if self.trials < 1:
            raise ValueError(f"trials must be >= 1 (got {self.trials})")
        if self.blocks_per_channel < 1:
            raise ValueError(f"blocks_per_channel must be >= 1 (got {self.blocks_per_channel})")
        if self.metric not in ("sum_rate", "ser"):
            raise ValueError(f"metric must be 'sum_rate' or 'ser' (got {self.metric!r})")

    def optimizer_config(self, mode: OptimizationMode) -> OptimizerConfig:
        step = self.step_size_joint if mode == OptimizationMode.JOINT else self.step_size_separate
        return OptimizerConfig(
            mode=mode,
            step_size=step,
            stop_rule=self.stop_rule,
            improvement_threshold=self.improvement_threshold,
            gradient_tolerance=self.gradient_tolerance,
            max_iterations=self.max_iterations,
            clamp_normalization=self.clamp_normalization,
        )

    def to_dict(self, include_output: bool = True) -> Dict[str, Any]:
        """Convert to a JSON-compatible dictionary"""
        result = {
            "kind": self.kind.value,
            "network": self.network.to_dict(),
            "designs": [d.value for d in self.designs],
            "snr_db": list(self.snr_db),
            "trials": self.trials,
            "seed": self.seed,
            "rzf_alpha": self.rzf_alpha,
            "step_size_joint": self.step_size_joint,
            "step_size_separate": self.step_size_separate,
            "stop_rule": self.stop_rule.value,
            "improvement_threshold": self.improvement_threshold,
            "gradient_tolerance": self.gradient_tolerance,
            "max_iterations": self.max_iterations,
            "clamp_normalization": self.clamp_normalization,
            "qam_order": self.qam_order,
            "blocks_per_channel": self.blocks_per_channel,
            "ser_modes": [m.value for m in self.ser_modes],
            "user_counts": list(self.user_counts),
            "match_antennas": self.match_antennas,
            "metric": self.metric,
            "schedules": list(self.schedules),
            "settings": [list(s) for s in self.settings],
        }
        if include_output:
            result["output"] = self.output
        return result


@dataclass
class ExperimentRow:
    """One CSV row: a (design, grid point, metric) aggregate"""
    experiment: str
    design: str
    snr_db: float
    n_users: int
    m_antennas: int
    metric_name: str
    mean: float
    stderr: float
    trials: int
    failures: int
    seed: int
    config_hash: str
    version: str

    COLUMNS = (
        "experiment", "design", "snr_db", "n_users", "m_antennas", "metric_name",
        "mean", "stderr", "trials", "failures", "seed", "config_hash", "version",
    )

    def to_dict(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.COLUMNS}
