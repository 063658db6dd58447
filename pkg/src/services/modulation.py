"""Gray-labelled square QAM"""
from functools import lru_cache

import numpy as np
from scipy.special import erfc


SUPPORTED_ORDERS = (4, 16, 64)


def _check_order(order: int) -> int:
    if order not in SUPPORTED_ORDERS:
        raise ValueError(f"QAM order must be one of {SUPPORTED_ORDERS} (got {order})")
    return int(np.log2(order))


@lru_cache(maxsize=None)
def constellation(order: int = 4) -> np.ndarray:
    """
    Unit-energy square QAM points indexed by their Gray label

    The first half of a label's bits selects the in-phase level and the
    second half the quadrature level, each Gray coded.

    Args:
        order: Constellation size (4, 16 or 64)

    Returns:
        Read-only complex array of length order
    """
    bits_per_symbol = _check_order(order)
    half = bits_per_symbol // 2
    side = 2 ** half

    levels = np.empty(side)
    for position in range(side):
        levels[position ^ (position >> 1)] = 2 * position - (side - 1)

    labels = np.arange(order)
    points = levels[labels >> half] + 1j * levels[labels & (side - 1)]
    points = points / np.sqrt(2.0 * (side ** 2 - 1) / 3.0)
    points.setflags(write=False)
    return points


def qam_map(bits: np.ndarray, order: int = 4) -> np.ndarray:
    """
    Map a bit stream onto QAM symbols

    Args:
        bits: 0/1 array whose length is a multiple of log2(order)
        order: Constellation size

    Returns:
        Complex symbols, one per log2(order) bits
    """
    bits_per_symbol = _check_order(order)
    bits = np.asarray(bits, dtype=int).ravel()
    if bits.size % bits_per_symbol:
        raise ValueError(f"bit count {bits.size} is not a multiple of {bits_per_symbol}")
    weights = 2 ** np.arange(bits_per_symbol - 1, -1, -1)
    labels = bits.reshape(-1, bits_per_symbol) @ weights
    return constellation(order)[labels]


def nearest_label(symbols: np.ndarray, order: int = 4) -> np.ndarray:
    """Gray label of the nearest constellation point for each received sample"""
    points = constellation(order)
    samples = np.asarray(symbols)
    distances = np.abs(samples[..., None] - points) ** 2
    return np.argmin(distances, axis=-1)


def qam_demap(symbols: np.ndarray, order: int = 4) -> np.ndarray:
    """Nearest-neighbour hard decision back to a flat bit array"""
    bits_per_symbol = _check_order(order)
    labels = nearest_label(np.ravel(symbols), order)
    shifts = np.arange(bits_per_symbol - 1, -1, -1)
    return ((labels[:, None] >> shifts) & 1).ravel()


def q_function(x):
    """Gaussian tail probability Q(x)"""
    return 0.5 * erfc(np.asarray(x) / np.sqrt(2.0))


def theoretical_ser(order: int, es_n0: float) -> float:
    """
    Symbol-error rate of square QAM over AWGN

    Args:
        order: Constellation size
        es_n0: Symbol energy to noise density ratio (linear)

    Returns:
        Exact SER 2p - p^2 with p the per-axis error probability
    """
    _check_order(order)
    side = np.sqrt(order)
    p = 2.0 * (1.0 - 1.0 / side) * q_function(np.sqrt(3.0 * es_n0 / (order - 1)))
    return float(2.0 * p - p ** 2)
