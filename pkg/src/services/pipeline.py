"""Experiment pipeline: Monte Carlo sweeps and CSV emission"""
import csv
import io
import json
import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Dict, Any, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .. import __version__
from ..models.schemas import (
    CancellationMode,
    Design,
    ExperimentKind,
    ExperimentRow,
    ExperimentSpec,
    NetworkConfig,
    OptimizationMode,
)
from ..utils.errors import SimulationError
from .config_loader import parse_schedule
from .designs import build_beamformers, design_factory
from .link_sim import simulate_ser, spawn_trial_seeds, stream_rng, CHANNEL_STREAM
from .metrics import rate_report
from .protocol import generate_channel
from .pzf_optimizer import write_trace_csv


logger = logging.getLogger(__name__)


def config_hash(spec: ExperimentSpec) -> str:
    """Short SHA-256 of the canonical JSON form of a spec (output path excluded)"""
    canonical = json.dumps(spec.to_dict(include_output=False), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def mean_and_stderr(samples: Sequence[float]) -> Tuple[float, float]:
    """Sample mean and its standard error (ddof = 1); NaN mean for no samples"""
    if len(samples) == 0:
        return float("nan"), float("nan")
    values = np.asarray(samples, dtype=float)
    if len(values) == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def _format_cell(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def rows_to_csv(rows: Sequence[ExperimentRow]) -> str:
    """Serialize rows as CSV text (header row, CRLF line endings)"""
    buffer = io.StringIO(newline="")
    writer = csv.writer(buffer, lineterminator="\r\n")
    writer.writerow(ExperimentRow.COLUMNS)
    for row in rows:
        writer.writerow([_format_cell(v) for v in row.to_dict().values()])
    return buffer.getvalue()


class ExperimentPipeline:
    """Runs an experiment spec and emits one row per (design, grid point, metric)"""

    def __init__(self, spec: ExperimentSpec, workers: int = 1, progress: bool = False):
        """
        Initialize the pipeline

        Args:
            spec: Validated experiment spec
            workers: Thread count for independent trials
            progress: Show tqdm progress bars
        """
        if workers < 1:
            raise ValueError(f"workers must be >= 1 (got {workers})")
        self.spec = spec
        self.workers = workers
        self.progress = progress
        self.config_hash = config_hash(spec)
        self.optimizer_options = {mode: spec.optimizer_config(mode) for mode in OptimizationMode}
        logger.info(f"Experiment pipeline initialized ({spec.kind.value}, hash {self.config_hash})")

    def run(self, trace_callback=None) -> List[ExperimentRow]:
        """
        Run every grid point of the experiment

        Args:
            trace_callback: Optional callback for tracing

        Returns:
            Rows in deterministic grid order
        """
        def trace(message):
            logger.info(message)
            if trace_callback:
                trace_callback(message)

        spec = self.spec
        trace(f"[Pipeline] Starting {spec.kind.value} experiment "
              f"({spec.trials} trials, seed {spec.seed}, hash {self.config_hash})")

        rows: List[ExperimentRow] = []
        for network, label_suffix in tqdm(self._networks(), desc=spec.kind.value, disable=not self.progress):
            trace(f"[Pipeline] Network N={network.n_users}, M={network.n_antennas}, "
                  f"{network.strategy.label}, {network.decoding_order.value}")
            for design in spec.designs:
                label = f"{design.value}{label_suffix}"
                if self._measures_ser():
                    rows.extend(self._ser_rows(network, design, label, trace))
                else:
                    rows.extend(self._rate_rows(network, design, label, trace))

        failures = sum(r.failures for r in rows)
        trace(f"[Pipeline] ✓ {len(rows)} rows produced, {failures} failed trials excluded")
        return rows

    def _measures_ser(self) -> bool:
        kind = self.spec.kind
        return kind == ExperimentKind.SER or (kind == ExperimentKind.USER_COUNT and self.spec.metric == "ser")

    def _networks(self) -> List[Tuple[NetworkConfig, str]]:
        """Network variants of the experiment with their design-label suffix"""
        spec = self.spec
        base = spec.network
        if spec.kind == ExperimentKind.USER_COUNT:
            return [
                (base.resized(n, n if spec.match_antennas else base.n_antennas), "")
                for n in spec.user_counts
            ]
        if spec.kind == ExperimentKind.SCHEDULING:
            variants = []
            for token in spec.schedules:
                strategy, order = parse_schedule(token)
                variants.append((base.with_strategy(strategy, order), f"[{token.strip().lower()}]"))
            return variants
        if spec.kind == ExperimentKind.REDUCED:
            return [(base.resized(n, m), "") for m, n in spec.settings]
        return [(base, "")]

    def _row(
        self,
        design_label: str,
        network: NetworkConfig,
        snr_db: float,
        metric: str,
        samples: Sequence[float],
        failures: int
    ) -> ExperimentRow:
        mean, stderr = mean_and_stderr(samples)
        return ExperimentRow(
            experiment=self.spec.kind.value,
            design=design_label,
            snr_db=float(snr_db),
            n_users=network.n_users,
            m_antennas=network.n_antennas,
            metric_name=metric,
            mean=mean,
            stderr=stderr,
            trials=len(samples),
            failures=failures,
            seed=self.spec.seed,
            config_hash=self.config_hash,
            version=__version__,
        )

    def _rate_rows(self, network: NetworkConfig, design: Design, label: str, trace) -> List[ExperimentRow]:
        spec = self.spec
        trial_seeds = spawn_trial_seeds(spec.seed, spec.trials)
        rows = []

        for snr_db in spec.snr_db:
            point = network.with_snr_db(snr_db)

            def run_trial(trial_seed) -> Optional[Tuple[float, Optional[int]]]:
                H = generate_channel(point, stream_rng(trial_seed, CHANNEL_STREAM))
                try:
                    beamformers = build_beamformers(
                        design, H, point, spec.rzf_alpha, self.optimizer_options
                    )
                    return rate_report(H, beamformers, point).sum_rate, beamformers.iterations
                except SimulationError as e:
                    logger.warning(f"{label} trial failed at {snr_db:g} dB: {e}")
                    return None

            outcomes = self._map(run_trial, trial_seeds)
            completed = [o for o in outcomes if o is not None]
            failures = len(outcomes) - len(completed)

            rate_row = self._row(label, point, snr_db, "sum_rate", [o[0] for o in completed], failures)
            rows.append(rate_row)
            if design.is_pzf:
                rows.append(self._row(label, point, snr_db, "iterations", [o[1] for o in completed], failures))
            trace(f"[Pipeline] {label} @ {snr_db:g} dB: mean sum-rate {rate_row.mean:.4f} ({failures} failures)")
        return rows

    def _ser_rows(self, network: NetworkConfig, design: Design, label: str, trace) -> List[ExperimentRow]:
        spec = self.spec
        results = simulate_ser(
            network,
            design_factory(design, spec.rzf_alpha, self.optimizer_options),
            spec.snr_db,
            spec.trials,
            seed=spec.seed,
            modes=spec.ser_modes,
            order=spec.qam_order,
            blocks_per_channel=spec.blocks_per_channel,
            workers=self.workers,
            progress=self.progress,
            trace_callback=trace,
        )
        rows = []
        for result in results:
            metric = "ser" if result.mode == CancellationMode.REALISTIC else "ser_genie"
            row = self._row(label, network, result.snr_db, metric, result.channel_means, result.failures)
            # pooled over all decode events rather than the mean of per-channel rates
            row.mean = result.aggregate_ser
            rows.append(row)
        return rows

    def _map(self, func, items) -> list:
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(func, items))
        return [func(item) for item in items]

    def metadata(self) -> Dict[str, Any]:
        """Sidecar metadata: resolved spec, defaulted keys and software version"""
        spec = self.spec
        return {
            "version": __version__,
            "config_hash": self.config_hash,
            "preset": spec.preset,
            "spec": spec.to_dict(),
            "defaults_applied": list(spec.defaults_applied),
            "qam_order": spec.qam_order,
            "qam_order_assumed": "qam_order" in spec.defaults_applied,
            "columns": list(ExperimentRow.COLUMNS),
        }

    def write_csv(self, rows: Sequence[ExperimentRow], path: Optional[str] = None) -> str:
        """
        Write the rows and the `<path>.meta.json` sidecar

        Returns:
            Path of the CSV file
        """
        path = path or self.spec.output
        with open(path, "w", newline="", encoding="utf-8") as handle:
            handle.write(rows_to_csv(rows))
        with open(f"{path}.meta.json", "w", encoding="utf-8") as handle:
            json.dump(self.metadata(), handle, indent=2, sort_keys=True)
            handle.write("\n")
        logger.info(f"Wrote {len(rows)} rows to {path}")
        return path

    def write_trace(self, path: str) -> Optional[str]:
        """
        Re-run the first trial of the first PZF design and export its optimizer trace

        The channel is the one every design saw in trial 0 at the first grid
        point, so the trace belongs to a row of the experiment.

        Args:
            path: Output CSV path

        Returns:
            The path, or None when the experiment has no PZF design
        """
        design = next((d for d in self.spec.designs if d.is_pzf), None)
        if design is None:
            logger.warning("No PZF design in the experiment; trace export skipped")
            return None

        network, _ = self._networks()[0]
        point = network.with_snr_db(self.spec.snr_db[0])
        H = generate_channel(point, stream_rng(spawn_trial_seeds(self.spec.seed, 1)[0], CHANNEL_STREAM))
        beamformers = build_beamformers(design, H, point, self.spec.rzf_alpha, self.optimizer_options)

        write_trace_csv(beamformers.metadata["trace"], path)
        logger.info(f"Wrote {design.value} optimizer trace at {self.spec.snr_db[0]:g} dB to {path}")
        return path


def run_experiment(spec: ExperimentSpec, workers: int = 1, progress: bool = False, trace_callback=None) -> List[ExperimentRow]:
    """Run a spec and return its rows"""
    return ExperimentPipeline(spec, workers=workers, progress=progress).run(trace_callback)
