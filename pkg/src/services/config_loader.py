"""Experiment documents (KEY=VALUE) and named presets"""
import io
import re
import logging
from typing import Dict, List, Optional, Tuple

from dotenv import dotenv_values

from ..models.schemas import (
    ChannelModel,
    DecodingOrder,
    ExperimentKind,
    ExperimentSpec,
    NetworkConfig,
    Strategy,
    StopRule,
    CancellationMode,
)
from ..utils.errors import ConfigError
from .designs import parse_design


logger = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"^(?:export\s+)?([A-Za-z_][A-Za-z0-9_]*)\s*=")

DEFAULTS: Dict[str, str] = {
    "experiment": "sumrate",
    "users": "3",
    "antennas": "3",
    "user_power": "1.0",
    "user_powers": "",
    "relay_power": "1.0",
    "channel": "homogeneous",
    "distances": "",
    "psi": "1.0",
    "path_loss_exponent": "2.0",
    "strategy": "unicast",
    "unicast_source": "",
    "multicast_order": "",
    "decoding_order": "clockwise",
    "designs": "ZF,PZF-Separate",
    "snr_db": "0:30:5",
    "trials": "100",
    "seed": "0",
    "output": "results.csv",
    "rzf_alpha": "1.0",
    "step_size_joint": "0.01",
    "step_size_separate": "0.03",
    "stop_rule": "improvement",
    "improvement_threshold": "0.05",
    "gradient_tolerance": "1e-4",
    "max_iterations": "1000",
    "clamp_normalization": "false",
    "qam_order": "4",
    "blocks_per_channel": "200",
    "ser_mode": "realistic",
    "user_counts": "3:8:1",
    "match_antennas": "false",
    "metric": "sum_rate",
    "schedules": "unicast",
    "settings": "3x3,2x3",
}

PRESETS: Dict[str, str] = {
    "fig4": """
# Sum-rate versus SNR, N = M = 3, homogeneous channels
experiment = sumrate
users = 3
antennas = 3
user_power = 1
relay_power = 1
designs = ZF,MMSE,MF,PZF-Joint,PZF-Separate
snr_db = 0:30:5
""",
    "fig5": """
# Sum-rate versus number of users at 20 dB, M = 8
experiment = sweep-users
antennas = 8
user_counts = 3:8:1
designs = ZF,PZF-Separate
snr_db = 20
""",
    "fig6": """
# SER versus SNR, N = M = 3, realistic and genie-aided cancellation
experiment = ser
users = 3
antennas = 3
designs = ZF,MMSE,MF,PZF-Separate
snr_db = 0:30:5
ser_mode = both
""",
    "fig7": """
# SER versus number of users with M = N at 15 dB
experiment = sweep-users
metric = ser
user_counts = 3:8:1
match_antennas = true
designs = ZF,MMSE,MF,PZF-Separate
snr_db = 15
""",
    "fig8": """
# SER with heterogeneous distances d_n = 2^(n-1) d_1, N = 4, M = 32
experiment = ser
users = 4
antennas = 32
channel = heterogeneous
distances = 1,2,4,8
path_loss_exponent = 2
designs = ZF,MMSE,MF,PZF-Separate
snr_db = 0:30:5
ser_mode = both
""",
    "fig9": """
# Unicasting versus hybrid uni/multicasting, N = M = 3
experiment = schedule-compare
users = 3
antennas = 3
designs = ZF,PZF-Separate
schedules = unicast; hybrid:1:2,3
snr_db = 0:30:5
""",
    "fig10": """
# Two hybrid detection schedules, d_3 = 2 d_2 = 2 d_1
experiment = schedule-compare
users = 3
antennas = 3
channel = heterogeneous
distances = 1,1,2
path_loss_exponent = 2
designs = PZF-Separate
schedules = hybrid:1:2,3; hybrid:1:3,2
snr_db = 0:30:5
""",
    "fig12": """
# Reduced relay antennas, settings given as MxN
experiment = reduced-compare
designs = PZF-Reduced
settings = 4x4,3x3,3x4,2x3
snr_db = 0:30:5
""",
    "hetero-order": """
# Clockwise versus counter-clockwise detection, d_3 = 2 d_2 = 4 d_1
experiment = schedule-compare
users = 3
antennas = 3
channel = heterogeneous
distances = 1,2,4
path_loss_exponent = 2
designs = ZF,PZF-Separate
schedules = unicast; unicast-ccw
snr_db = 0:30:5
""",
}


def _scan_lines(text: str) -> Dict[str, int]:
    """Map every key to its line number, rejecting malformed lines and unknown keys"""
    lines = {}
    for number, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = KEY_PATTERN.match(line)
        if not match:
            raise ConfigError(f"expected KEY=VALUE, got {line!r}", line=number)
        key = match.group(1).lower()
        if key not in DEFAULTS:
            raise ConfigError("unknown key", line=number, field=key)
        if key in lines:
            raise ConfigError(f"duplicate key (first set on line {lines[key]})", line=number, field=key)
        lines[key] = number
    return lines


class _Fields:
    """Typed access to document values with line/field diagnostics"""

    def __init__(self, values: Dict[str, str], lines: Dict[str, int]):
        self.values = values
        self.lines = lines

    def error(self, key: str, message: str) -> ConfigError:
        return ConfigError(message, line=self.lines.get(key), field=key)

    def raw(self, key: str) -> str:
        value = self.values.get(key)
        return (DEFAULTS[key] if value is None else value).strip()

    def text(self, key: str) -> str:
        return self.raw(key)

    def number(self, key: str) -> float:
        try:
            return float(self.raw(key))
        except ValueError:
            raise self.error(key, f"expected a number, got {self.raw(key)!r}")

    def integer(self, key: str) -> int:
        try:
            return int(self.raw(key))
        except ValueError:
            raise self.error(key, f"expected an integer, got {self.raw(key)!r}")

    def flag(self, key: str) -> bool:
        value = self.raw(key).lower()
        if value in ("true", "yes", "on", "1"):
            return True
        if value in ("false", "no", "off", "0"):
            return False
        raise self.error(key, f"expected true/false, got {value!r}")

    def items(self, key: str, separator: str = ",") -> List[str]:
        return [item.strip() for item in self.raw(key).split(separator) if item.strip()]

    def numbers(self, key: str) -> List[float]:
        try:
            return [float(v) for v in self.items(key)]
        except ValueError:
            raise self.error(key, f"expected a comma-separated list of numbers, got {self.raw(key)!r}")

    def integers(self, key: str) -> List[int]:
        try:
            return [int(v) for v in self.items(key)]
        except ValueError:
            raise self.error(key, f"expected a comma-separated list of integers, got {self.raw(key)!r}")

    def grid(self, key: str) -> List[float]:
        """Comma list or inclusive start:stop:step range"""
        value = self.raw(key)
        if ":" not in value:
            return self.numbers(key)
        try:
            start, stop, step = (float(part) for part in value.split(":"))
        except ValueError:
            raise self.error(key, f"expected start:stop:step, got {value!r}")
        if step <= 0 or stop < start:
            raise self.error(key, f"range {value!r} must have step > 0 and stop >= start")
        count = int(round((stop - start) / step)) + 1
        return [round(start + idx * step, 10) for idx in range(count)]

    def choice(self, key: str, choices: Tuple[str, ...]) -> str:
        value = self.raw(key).lower()
        if value not in choices:
            raise self.error(key, f"expected one of {', '.join(choices)}, got {value!r}")
        return value


def parse_schedule(token: str) -> Tuple[Strategy, DecodingOrder]:
    """
    Parse a schedule token: unicast, unicast-ccw or hybrid:<source>:<m1>,<m2>,...

    Raises:
        ValueError: for malformed tokens
    """
    token = token.strip().lower()
    if token == "unicast":
        return Strategy.unicast(), DecodingOrder.CLOCKWISE
    if token == "unicast-ccw":
        return Strategy.unicast(), DecodingOrder.COUNTER_CLOCKWISE
    parts = token.split(":")
    if len(parts) == 3 and parts[0] == "hybrid":
        try:
            source = int(parts[1])
            order = tuple(int(m) for m in parts[2].split(","))
        except ValueError:
            raise ValueError(f"malformed hybrid schedule {token!r}")
        return Strategy.hybrid(source, order), DecodingOrder.CLOCKWISE
    raise ValueError(f"unknown schedule {token!r} (expected unicast, unicast-ccw or hybrid:u:m1,m2,...)")


def _build_network(fields: _Fields) -> NetworkConfig:
    n_users = fields.integer("users")
    n_antennas = fields.integer("antennas")

    if fields.raw("user_powers"):
        powers = tuple(fields.numbers("user_powers"))
    else:
        powers = (fields.number("user_power"),) * n_users

    if fields.choice("channel", ("homogeneous", "heterogeneous")) == "heterogeneous":
        if not fields.raw("distances"):
            raise fields.error("distances", "heterogeneous channel requires distances")
        channel = ChannelModel.heterogeneous(
            tuple(fields.numbers("distances")),
            psi=fields.number("psi"),
            exponent=fields.number("path_loss_exponent"),
        )
    else:
        channel = ChannelModel.homogeneous()

    if fields.choice("strategy", ("unicast", "hybrid")) == "hybrid":
        if not fields.raw("unicast_source") or not fields.raw("multicast_order"):
            raise fields.error("strategy", "hybrid strategy requires unicast_source and multicast_order")
        strategy = Strategy.hybrid(fields.integer("unicast_source"), tuple(fields.integers("multicast_order")))
    else:
        strategy = Strategy.unicast()

    return NetworkConfig(
        n_users=n_users,
        n_antennas=n_antennas,
        user_powers=powers,
        relay_power=fields.number("relay_power"),
        channel=channel,
        strategy=strategy,
        decoding_order=DecodingOrder(fields.choice("decoding_order", ("clockwise", "counterclockwise"))),
    )


def _parse_settings(fields: _Fields) -> Tuple[Tuple[int, int], ...]:
    settings = []
    for item in fields.items("settings"):
        match = re.fullmatch(r"(\d+)\s*[xX]\s*(\d+)", item)
        if not match:
            raise fields.error("settings", f"expected MxN, got {item!r}")
        settings.append((int(match.group(1)), int(match.group(2))))
    return tuple(settings)


def parse_config(text: str, preset: Optional[str] = None) -> ExperimentSpec:
    """
    Parse and validate an experiment document

    Args:
        text: KEY=VALUE lines; '#' starts a comment
        preset: Preset name recorded in the spec

    Returns:
        Fully validated ExperimentSpec

    Raises:
        ConfigError: with the offending line and key when available
    """
    lines = _scan_lines(text)
    values = {key.lower(): value for key, value in dotenv_values(stream=io.StringIO(text)).items()}
    fields = _Fields(values, lines)
    defaulted = tuple(key for key in DEFAULTS if key not in lines)

    try:
        kind = ExperimentKind(fields.choice("experiment", tuple(k.value for k in ExperimentKind)))
        try:
            network = _build_network(fields)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"invalid network: {e}")

        if kind == ExperimentKind.REDUCED and "designs" not in lines:
            values["designs"] = "PZF-Reduced"
        designs = []
        for name in fields.items("designs"):
            try:
                designs.append(parse_design(name))
            except ValueError as e:
                raise fields.error("designs", str(e))

        ser_mode = fields.choice("ser_mode", ("realistic", "genie", "both"))
        ser_modes = (
            (CancellationMode.REALISTIC, CancellationMode.GENIE)
            if ser_mode == "both" else (CancellationMode(ser_mode),)
        )

        schedules = tuple(fields.items("schedules", separator=";"))
        for token in schedules:
            try:
                strategy, _ = parse_schedule(token)
                if strategy.multicast_order:
                    network.with_strategy(strategy)
            except ValueError as e:
                raise fields.error("schedules", str(e))

        user_counts = tuple(int(v) for v in fields.grid("user_counts"))
        settings = _parse_settings(fields)
        if kind == ExperimentKind.REDUCED and not settings:
            raise fields.error("settings", "reduced-compare needs at least one MxN setting")

        spec = ExperimentSpec(
            kind=kind,
            network=network,
            designs=tuple(designs),
            snr_db=tuple(fields.grid("snr_db")),
            trials=fields.integer("trials"),
            seed=fields.integer("seed"),
            output=fields.text("output"),
            rzf_alpha=fields.number("rzf_alpha"),
            step_size_joint=fields.number("step_size_joint"),
            step_size_separate=fields.number("step_size_separate"),
            stop_rule=StopRule(fields.choice("stop_rule", ("improvement", "gradient"))),
            improvement_threshold=fields.number("improvement_threshold"),
            gradient_tolerance=fields.number("gradient_tolerance"),
            max_iterations=fields.integer("max_iterations"),
            clamp_normalization=fields.flag("clamp_normalization"),
            qam_order=fields.integer("qam_order"),
            blocks_per_channel=fields.integer("blocks_per_channel"),
            ser_modes=ser_modes,
            user_counts=user_counts,
            match_antennas=fields.flag("match_antennas"),
            metric=fields.choice("metric", ("sum_rate", "ser")),
            schedules=schedules,
            settings=settings,
            defaults_applied=defaulted,
            preset=preset,
        )
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError(str(e))

    if spec.qam_order not in (4, 16, 64):
        raise fields.error("qam_order", f"QAM order must be 4, 16 or 64 (got {spec.qam_order})")
    if spec.seed < 0:
        raise fields.error("seed", f"seed must be >= 0 (got {spec.seed})")

    logger.info(
        f"Parsed {kind.value} experiment: N={network.n_users}, M={network.n_antennas}, "
        f"designs={[d.value for d in spec.designs]}, {len(defaulted)} defaults applied"
    )
    return spec


def preset_spec(name: str) -> ExperimentSpec:
    """
    Experiment spec of a named preset

    Raises:
        ConfigError: for unknown preset names
    """
    if name not in PRESETS:
        raise ConfigError(f"unknown preset '{name}' (expected one of {', '.join(PRESETS)})", field="preset")
    return parse_config(PRESETS[name], preset=name)


def default_spec(kind: ExperimentKind) -> ExperimentSpec:
    """Spec built from defaults only, for the given experiment kind"""
    return parse_config(f"experiment = {ExperimentKind(kind).value}\n")
