"""Closed-form transceive beamformers (ZF, MMSE, RZF, MF)"""
import logging
from typing import Sequence

import numpy as np
from scipy import linalg

from ..models.schemas import NetworkConfig
from ..utils.errors import DegenerateBeamformerError
from ..utils.linalg import left_pseudoinverse, hermitian
from .protocol import selection_matrix


logger = logging.getLogger(__name__)


def relay_power(G: np.ndarray, H: np.ndarray, user_powers: Sequence[float]) -> float:
    """
    Average relay transmit power tr{G (H P_s H^H + I_M) G^H}

    Args:
        G: M x M relay matrix
        H: M x N channel matrix
        user_powers: Length-N transmit powers

    Returns:
        Non-negative transmit power
    """
    M, N = H.shape
    if G.shape != (M, M):
        raise ValueError(f"relay matrix must be {M}x{M} (got {G.shape})")
    powers = np.asarray(user_powers, dtype=float)
    if powers.shape != (N,):
        raise ValueError(f"expected {N} user powers (got {powers.shape})")

    covariance = (H * powers) @ hermitian(H) + np.eye(M)
    return float(np.real(np.trace(G @ covariance @ hermitian(G))))


def normalize_power(
    G: np.ndarray,
    H: np.ndarray,
    user_powers: Sequence[float],
    power_budget: float
) -> np.ndarray:
    """
    Scale G by a positive real factor so the relay power equals power_budget

    Raises:
        DegenerateBeamformerError: if G carries no power or is not finite
    """
    power = relay_power(G, H, user_powers)
    if not np.isfinite(power) or power <= 0:
        raise DegenerateBeamformerError(f"cannot normalize a relay matrix with power {power}")
    return G * np.sqrt(power_budget / power)


def zf_transceiver(
    H: np.ndarray,
    schedule: np.ndarray,
    user_powers: Sequence[float],
    power_budget: float
) -> np.ndarray:
    """
    Zero-forcing relay matrix (H^+)^T S H^+ normalized to the power budget

    Args:
        H: M x N channel with M >= N and full column rank
        schedule: N x N selection matrix S (P^n for clockwise unicast)
        user_powers: Length-N transmit powers
        power_budget: Relay power P_R

    Returns:
        M x M matrix with H^T G H proportional to S

    Raises:
        SingularChannelError: if H is rank deficient
    """
    H_pinv = left_pseudoinverse(H)
    G = H_pinv.T @ schedule @ H_pinv
    return normalize_power(G, H, user_powers, power_budget)


def receive_filter(H: np.ndarray, user_powers: Sequence[float], alpha: float = 1.0) -> np.ndarray:
    """Regularized receive filter P_s H^H (H P_s H^H + alpha I)^-1, N x M"""
    M = H.shape[0]
    powers = np.asarray(user_powers, dtype=float)
    weighted = H * powers
    covariance = weighted @ hermitian(H) + alpha * np.eye(M)
    return hermitian(linalg.solve(covariance, weighted, assume_a="pos"))


def transmit_filter(H: np.ndarray, power_budget: float) -> np.ndarray:
    """MMSE transmit filter (H* H^T + (N/P_R) I)^-1 H*, M x N"""
    M, N = H.shape
    gram = H.conj() @ H.T + (N / power_budget) * np.eye(M)
    return linalg.solve(gram, H.conj(), assume_a="pos")


def rzf_transceiver(
    H: np.ndarray,
    schedule: np.ndarray,
    user_powers: Sequence[float],
    power_budget: float,
    alpha: float = 1.0
) -> np.ndarray:
    """
    Regularized ZF relay matrix G_TX S G_RX; alpha = 1 gives MMSE

    Args:
        H: M x N channel matrix
        schedule: N x N selection matrix
        user_powers: Length-N transmit powers
        power_budget: Relay power P_R
        alpha: Receive-side regularization replacing I_M

    Returns:
        Power-normalized M x M matrix
    """
    if not alpha > 0:
        raise ValueError(f"regularization must be > 0 (got {alpha})")
    G = transmit_filter(H, power_budget) @ schedule @ receive_filter(H, user_powers, alpha)
    return normalize_power(G, H, user_powers, power_budget)


def mmse_transceiver(
    H: np.ndarray,
    schedule: np.ndarray,
    user_powers: Sequence[float],
    power_budget: float
) -> np.ndarray:
    return rzf_transceiver(H, schedule, user_powers, power_budget, alpha=1.0)


def mf_transceiver(
    H: np.ndarray,
    schedule: np.ndarray,
    user_powers: Sequence[float],
    power_budget: float
) -> np.ndarray:
    """Matched-filter transmit side H* with the MMSE receive filter"""
    G = H.conj() @ schedule @ receive_filter(H, user_powers)
    return normalize_power(G, H, user_powers, power_budget)


def zf_beamformer(H: np.ndarray, config: NetworkConfig, n: int) -> np.ndarray:
    """ZF relay matrix of BC slot n"""
    return zf_transceiver(H, selection_matrix(config, n), config.power_array, config.relay_power)


def mmse_beamformer(H: np.ndarray, config: NetworkConfig, n: int) -> np.ndarray:
    """MMSE relay matrix of BC slot n"""
    return mmse_transceiver(H, selection_matrix(config, n), config.power_array, config.relay_power)


def rzf_beamformer(H: np.ndarray, config: NetworkConfig, n: int, alpha: float = 1.0) -> np.ndarray:
    """RZF relay matrix of BC slot n"""
    return rzf_transceiver(H, selection_matrix(config, n), config.power_array, config.relay_power, alpha)


def mf_beamformer(H: np.ndarray, config: NetworkConfig, n: int) -> np.ndarray:
    """MF relay matrix of BC slot n"""
    return mf_transceiver(H, selection_matrix(config, n), config.power_array, config.relay_power)
