"""SINR and achievable-rate computation"""
import logging
from typing import Optional, Sequence

import numpy as np

from ..models.schemas import NetworkConfig, RateReport, BeamformerSet
from .protocol import decoded_set, slot_of, equivalent_channel


logger = logging.getLogger(__name__)


def sinr(
    H: np.ndarray,
    G: np.ndarray,
    k: int,
    i: int,
    config: NetworkConfig,
    slot: Optional[int] = None
) -> float:
    """
    SINR of source i's symbol at receiver k

    Args:
        H: M x N channel matrix
        G: Relay matrix of the slot in question
        k: Receiver index (1-based)
        i: Source index (1-based)
        config: Network configuration
        slot: BC slot for successive cancellation; None counts every j != i
            (including receiver k's own symbol) as interference

    Returns:
        Non-negative SINR
    """
    if k == i:
        raise ValueError(f"receiver and source must differ (got {k})")

    A = equivalent_channel(H, G)
    powers = config.power_array
    row = A[k - 1]
    relay_noise = float(np.sum(np.abs(H[:, k - 1] @ G) ** 2))

    excluded = {i}
    if slot is not None:
        excluded |= {k} | decoded_set(k, slot, config)
    interferers = [j - 1 for j in range(1, config.n_users + 1) if j not in excluded]

    interference = float(np.sum(powers[interferers] * np.abs(row[interferers]) ** 2))
    signal = powers[i - 1] * abs(row[i - 1]) ** 2
    return float(signal / (interference + relay_noise + 1.0))


def common_rates(pair_rates: np.ndarray) -> np.ndarray:
    """R_i = min over receivers k != i of R_{k,i}"""
    N = pair_rates.shape[0]
    masked = np.where(np.eye(N, dtype=bool), np.inf, pair_rates)
    return masked.min(axis=0)


def network_sum_rate(source_rates: Sequence[float]) -> float:
    """R_sum = (N-1)/N times the sum of the common rates"""
    N = len(source_rates)
    return float((N - 1) / N * np.sum(source_rates))


def rate_report(
    H: np.ndarray,
    beamformers: BeamformerSet,
    config: NetworkConfig,
    cancel: bool = True
) -> RateReport:
    """
    Pair, common and network rates of a beamformer set

    Args:
        H: M x N channel matrix
        beamformers: Relay matrices of slots 1..N-1
        config: Network configuration
        cancel: Use SINR after interference cancellation (False is diagnostic)

    Returns:
        RateReport
    """
    N = config.n_users
    if len(beamformers) != config.n_slots:
        raise ValueError(f"expected {config.n_slots} relay matrices (got {len(beamformers)})")

    pair_rates = np.zeros((N, N))
    for k in range(1, N + 1):
        for i in range(1, N + 1):
            if k == i:
                continue
            n = slot_of(k, i, config)
            gamma = sinr(H, beamformers.slot(n), k, i, config, slot=n if cancel else None)
            pair_rates[k - 1, i - 1] = np.log2(1.0 + gamma)

    per_source = common_rates(pair_rates)
    return RateReport(
        pair_rates=pair_rates,
        common_rates=per_source,
        sum_rate=network_sum_rate(per_source),
    )
