"""Symbol-level Monte Carlo simulation of the relay protocol"""
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Sequence, Union

import numpy as np
from tqdm import tqdm

from ..models.schemas import (
    NetworkConfig,
    BeamformerSet,
    BlockOutcome,
    SerResult,
    CancellationMode,
)
from ..utils.errors import SimulationError
from .protocol import generate_channel, decode_target, decoded_set, equivalent_channel, received_signal
from .modulation import constellation, nearest_label


logger = logging.getLogger(__name__)

CHANNEL_STREAM = 0
SYMBOL_STREAM = 1

BeamformerFactory = Callable[[np.ndarray, NetworkConfig], BeamformerSet]


def spawn_trial_seeds(seed: Union[int, np.random.SeedSequence], trials: int) -> List[np.random.SeedSequence]:
    """Independent per-trial seed sequences derived from a master seed"""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(trials)


def stream_rng(trial_seed: np.random.SeedSequence, stream: int) -> np.random.Generator:
    """
    Generator for one random stream of a trial

    The same (trial, stream) pair always yields the same draws, independently
    of how many other streams were requested before.
    """
    return np.random.default_rng(
        np.random.SeedSequence(trial_seed.entropy, spawn_key=trial_seed.spawn_key + (stream,))
    )


def _complex_noise(rng: np.random.Generator, shape, variance: float) -> np.ndarray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_block(
    H: np.ndarray,
    beamformers: BeamformerSet,
    config: NetworkConfig,
    rng: np.random.Generator,
    mode: CancellationMode = CancellationMode.REALISTIC,
    order: int = 4,
    blocks: int = 1,
    noise_variance: float = 1.0
) -> BlockOutcome:
    """
    Transmit and decode a batch of blocks over one channel realization

    Each block is one MAC slot followed by N-1 BC slots, with fresh relay and
    user noise in every BC slot. Receiver k removes its own symbol and the
    symbols it decoded earlier, equalizes the target gain and takes a
    nearest-neighbour decision.

    Args:
        H: M x N channel matrix
        beamformers: Relay matrices of slots 1..N-1
        config: Network configuration
        rng: Generator for symbols and noise
        mode: REALISTIC cancels with earlier decisions, GENIE with the true symbols
        order: QAM order
        blocks: Number of blocks B
        noise_variance: Relay and user noise variance (0 for noiseless diagnostics)

    Returns:
        BlockOutcome with per (receiver, source) error counts
    """
    mode = CancellationMode(mode)
    M, N = H.shape
    points = constellation(order)
    amplitudes = np.sqrt(config.power_array)

    labels = rng.integers(0, order, size=(blocks, N))
    symbols = points[labels] * amplitudes

    decisions = np.zeros((blocks, N, N), dtype=int)
    errors = np.zeros((N, N), dtype=int)
    max_residual = 0.0

    for n in range(1, N):
        G = beamformers.slot(n)
        A = equivalent_channel(H, G)
        received = received_signal(
            H, G, symbols,
            relay_noise=_complex_noise(rng, (blocks, M), noise_variance),
            user_noise=_complex_noise(rng, (blocks, N), noise_variance),
        )

        for k in range(1, N + 1):
            i = decode_target(k, n, config)
            known = sorted(decoded_set(k, n, config))
            gain = A[k - 1, i - 1] * amplitudes[i - 1]

            cleaned = received[:, k - 1] - A[k - 1, k - 1] * symbols[:, k - 1]
            for j in known:
                if mode == CancellationMode.GENIE:
                    estimate = symbols[:, j - 1]
                else:
                    estimate = points[decisions[:, k - 1, j - 1]] * amplitudes[j - 1]
                cleaned = cleaned - A[k - 1, j - 1] * estimate

            if gain == 0:
                errors[k - 1, i - 1] += blocks
                continue

            uncancelled = [j - 1 for j in range(1, N + 1) if j != k and j != i and j not in known]
            if uncancelled:
                leak = symbols[:, uncancelled] @ A[k - 1, uncancelled] / gain
                max_residual = max(max_residual, float(np.max(np.abs(leak) ** 2)))

            decided = nearest_label(cleaned / gain, order)
            decisions[:, k - 1, i - 1] = decided
            errors[k - 1, i - 1] += int(np.count_nonzero(decided != labels[:, i - 1]))

    return BlockOutcome(errors=errors, blocks=blocks, max_residual=max_residual)


def simulate_ser(
    config: NetworkConfig,
    beamformer_factory: BeamformerFactory,
    snr_grid: Sequence[float],
    trials: int,
    seed: Union[int, np.random.SeedSequence] = 0,
    modes: Sequence[CancellationMode] = (CancellationMode.REALISTIC,),
    order: int = 4,
    blocks_per_channel: int = 200,
    workers: int = 1,
    progress: bool = False,
    trace_callback=None
) -> List[SerResult]:
    """
    Average symbol-error rates over independent channel draws

    Args:
        config: Network configuration; the SNR grid rescales its channel model
        beamformer_factory: Builds the relay matrices for (H, config)
        snr_grid: SNR points in dB
        trials: Channel realizations per SNR point
        seed: Master seed
        modes: Cancellation modes, evaluated on identical symbols and noise
        order: QAM order
        blocks_per_channel: Blocks simulated per channel realization
        workers: Thread count for trials
        progress: Show a tqdm bar per SNR point
        trace_callback: Optional callback for tracing

    Returns:
        One SerResult per (SNR point, mode), SNR-major
    """
    def trace(message):
        logger.info(message)
        if trace_callback:
            trace_callback(message)

    if trials < 1:
        raise ValueError(f"trials must be >= 1 (got {trials})")
    modes = [CancellationMode(m) for m in modes]
    trial_seeds = spawn_trial_seeds(seed, trials)
    N = config.n_users
    results = []

    for snr_db in snr_grid:
        point_config = config.with_snr_db(snr_db)

        def run_trial(trial_seed):
            H = generate_channel(point_config, stream_rng(trial_seed, CHANNEL_STREAM))
            try:
                beamformers = beamformer_factory(H, point_config)
            except SimulationError as e:
                logger.warning(f"Trial skipped at {snr_db} dB: {e}")
                return None
            return {
                mode: simulate_block(
                    H, beamformers, point_config, stream_rng(trial_seed, SYMBOL_STREAM),
                    mode=mode, order=order, blocks=blocks_per_channel,
                )
                for mode in modes
            }

        iterator = tqdm(trial_seeds, desc=f"SER {snr_db:g} dB", disable=not progress, leave=False)
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                outcomes = list(pool.map(run_trial, iterator))
        else:
            outcomes = [run_trial(s) for s in iterator]

        completed = [o for o in outcomes if o is not None]
        failures = len(outcomes) - len(completed)
        for mode in modes:
            results.append(_summarize(snr_db, mode, [o[mode] for o in completed], N, failures))
        trace(f"[SER] {snr_db:g} dB: {len(completed)} channels, {failures} failures")

    return results


def _summarize(
    snr_db: float,
    mode: CancellationMode,
    outcomes: List[BlockOutcome],
    n_users: int,
    failures: int
) -> SerResult:
    errors = np.zeros((n_users, n_users), dtype=int)
    for outcome in outcomes:
        errors += outcome.errors
    events = sum(o.events for o in outcomes)
    receiver_events = sum(o.blocks for o in outcomes) * (n_users - 1)

    per_user = errors.sum(axis=1) / receiver_events if receiver_events else np.zeros(n_users)
    total = int(errors.sum())
    return SerResult(
        snr_db=float(snr_db),
        mode=mode,
        per_user_ser=per_user,
        aggregate_ser=total / events if events else 0.0,
        errors=total,
        events=events,
        trials=len(outcomes),
        failures=failures,
        channel_means=[float(o.errors.sum() / o.events) for o in outcomes],
    )
