"""Transmission protocol: channels, decoding schedule and zero patterns"""
import logging
from typing import Optional, FrozenSet

import numpy as np

from ..models.schemas import (
    NetworkConfig,
    ZeroPattern,
    DecodingOrder,
    StrategyKind,
)


logger = logging.getLogger(__name__)


def generate_channel(config: NetworkConfig, rng: np.random.Generator) -> np.ndarray:
    """
    Draw an M x N Rayleigh channel; column i holds user i's channel to the relay

    Args:
        config: Network configuration
        rng: Seeded numpy generator

    Returns:
        Complex M x N matrix with CN(0, sigma_i^2) entries in column i
    """
    shape = (config.n_antennas, config.n_users)
    scale = np.sqrt(config.variances() / 2.0)
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * scale


def _check_indices(config: NetworkConfig, k: int, n: int):
    if not 1 <= k <= config.n_users:
        raise ValueError(f"receiver index must be in 1..{config.n_users} (got {k})")
    if not 1 <= n <= config.n_slots:
        raise ValueError(f"slot index must be in 1..{config.n_slots} (got {n})")


def decode_target(k: int, n: int, config: NetworkConfig) -> int:
    """
    Source whose symbol receiver k decodes in BC slot n (1-based)

    Args:
        k: Receiver index
        n: Slot index, 1..N-1
        config: Network configuration

    Returns:
        Source index, never equal to k
    """
    _check_indices(config, k, n)
    N = config.n_users

    if config.strategy.kind == StrategyKind.HYBRID:
        multicast = config.strategy.multicast_order[n - 1]
        # the multicast source's own receiver gets the unicast symbol instead
        return config.strategy.unicast_source if k == multicast else multicast

    if config.decoding_order == DecodingOrder.CLOCKWISE:
        return (k + n - 1) % N + 1
    return (k - n - 1) % N + 1


def decoded_set(k: int, n: int, config: NetworkConfig) -> FrozenSet[int]:
    """Indices of the symbols receiver k has decoded before slot n"""
    _check_indices(config, k, n)
    return frozenset(decode_target(k, q, config) for q in range(1, n))


def slot_of(k: int, i: int, config: NetworkConfig) -> int:
    """
    BC slot in which receiver k decodes source i

    Raises:
        ValueError: if k == i or the schedule never delivers s_i to k
    """
    if k == i:
        raise ValueError(f"receiver {k} never decodes its own symbol")
    for n in range(1, config.n_users):
        if decode_target(k, n, config) == i:
            return n
    raise ValueError(f"schedule never delivers s_{i} to user {k}")


def zero_pattern(config: NetworkConfig) -> ZeroPattern:
    """
    Forced-zero entries of the equivalent channels

    At receiver k in slot n every interferer that is neither k itself, an
    already decoded symbol, nor the current target must be cancelled by the
    relay.

    Args:
        config: Network configuration

    Returns:
        ZeroPattern with (receiver, interferer, slot) tuples
    """
    N = config.n_users
    tuples = set()
    for n in range(1, N):
        for k in range(1, N + 1):
            keep = {k, decode_target(k, n, config)} | decoded_set(k, n, config)
            for j in range(1, N + 1):
                if j not in keep:
                    tuples.add((k, j, n))

    pattern = ZeroPattern(n_users=N, tuples=frozenset(tuples))
    logger.debug(f"Zero pattern for N={N} ({config.strategy.label}): {len(pattern)} entries")
    return pattern


def permutation_matrix(n_users: int, n: int) -> np.ndarray:
    """
    n-th power of the single circular shift of I_N's columns to the right

    Args:
        n_users: Matrix size N
        n: Non-negative power

    Returns:
        N x N permutation matrix with ones at (k, k+n mod N)
    """
    if n < 0:
        raise ValueError(f"permutation power must be >= 0 (got {n})")
    return np.roll(np.eye(n_users), n, axis=1)


def selection_matrix(config: NetworkConfig, n: int) -> np.ndarray:
    """
    0/1 matrix selecting each receiver's slot-n target

    Equals permutation_matrix(N, n) for clockwise unicast and generalizes it
    to counter-clockwise and hybrid schedules.
    """
    N = config.n_users
    S = np.zeros((N, N))
    for k in range(1, N + 1):
        S[k - 1, decode_target(k, n, config) - 1] = 1.0
    return S


def equivalent_channel(H: np.ndarray, G: np.ndarray) -> np.ndarray:
    """End-to-end N x N channel H^T G H of one BC slot"""
    return H.T @ G @ H


def received_signal(
    H: np.ndarray,
    G: np.ndarray,
    s: np.ndarray,
    relay_noise: Optional[np.ndarray] = None,
    user_noise: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Signals at the N users in one BC slot

    Batches are supported: s, relay_noise and user_noise may carry leading
    dimensions (one row per block).

    Args:
        H: M x N channel matrix
        G: M x M relay matrix
        s: Transmitted symbols, last axis of length N
        relay_noise: Relay noise z_RS, last axis of length M (omitted means noiseless)
        user_noise: User noise, last axis of length N (omitted means noiseless)

    Returns:
        H^T G H s + H^T G z_RS + z_users, with the leading shape of s
    """
    M, N = H.shape
    if G.shape != (M, M):
        raise ValueError(f"relay matrix must be {M}x{M} (got {G.shape})")
    if s.shape[-1:] != (N,):
        raise ValueError(f"symbol vectors must have length {N} (got {s.shape})")

    forwarded = s @ H.T
    if relay_noise is not None:
        if relay_noise.shape != s.shape[:-1] + (M,):
            raise ValueError(f"relay noise must have shape {s.shape[:-1] + (M,)} (got {relay_noise.shape})")
        forwarded = forwarded + relay_noise

    r = forwarded @ (H.T @ G).T
    if user_noise is not None:
        if user_noise.shape != s.shape:
            raise ValueError(f"user noise must have shape {s.shape} (got {user_noise.shape})")
        r = r + user_noise
    return r
