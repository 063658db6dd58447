"""Validation utilities for network and experiment parameters"""
import math
from typing import Sequence, Tuple


def validate_dimensions(n_users: int, n_antennas: int) -> Tuple[bool, str]:
    """
    Validate user and relay-antenna counts

    Args:
        n_users: Number of single-antenna users N
        n_antennas: Number of relay antennas M

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not isinstance(n_users, int) or isinstance(n_users, bool):
        return False, f"user count must be an integer (got {n_users!r})"
    if not isinstance(n_antennas, int) or isinstance(n_antennas, bool):
        return False, f"antenna count must be an integer (got {n_antennas!r})"

    if n_users < 2:
        return False, f"at least 2 users are required (got {n_users})"

    if n_antennas < n_users - 1:
        return False, (
            f"relay needs at least N-1 = {n_users - 1} antennas "
            f"(got M={n_antennas})"
        )

    return True, ""


def validate_powers(powers: Sequence[float], label: str = "power") -> Tuple[bool, str]:
    """
    Validate that every power value is finite and strictly positive

    Args:
        powers: Power values in linear scale
        label: Name used in the error message

    Returns:
        Tuple of (is_valid, error_message)
    """
    if len(powers) == 0:
        return False, f"{label} list cannot be empty"

    for idx, value in enumerate(powers, 1):
        if not math.isfinite(value) or value <= 0:
            return False, f"{label} #{idx} must be finite and > 0 (got {value})"

    return True, ""


def validate_multicast_order(
    n_users: int,
    unicast_source: int,
    multicast_order: Sequence[int]
) -> Tuple[bool, str]:
    """
    Validate a hybrid uni/multicasting schedule

    Args:
        n_users: Number of users N
        unicast_source: 1-based index of the unicast symbol's source
        multicast_order: 1-based sources multicast in slots 1..N-1

    Returns:
        Tuple of (is_valid, error_message)
    """
    if not 1 <= unicast_source <= n_users:
        return False, f"unicast source must be in 1..{n_users} (got {unicast_source})"

    expected = sorted(set(range(1, n_users + 1)) - {unicast_source})
    if sorted(multicast_order) != expected:
        return False, (
            f"multicast order must be a permutation of {expected} "
            f"(got {list(multicast_order)})"
        )

    return True, ""


def validate_snr_grid(snr_db: Sequence[float]) -> Tuple[bool, str]:
    """Validate an SNR grid given in dB"""
    if len(snr_db) == 0:
        return False, "SNR grid cannot be empty"
    if not all(math.isfinite(v) for v in snr_db):
        return False, "SNR grid values must be finite"
    return True, ""


def format_design_name(name: str) -> str:
    """
    Normalize a beamformer design name to its canonical spelling

    Args:
        name: Design name such as "pzf-separate" or " ZF "

    Returns:
        Canonical upper-case name with a "PZF-" prefix kept hyphenated
    """
    cleaned = name.strip().upper().replace("_", "-")
    if cleaned.startswith("PZF-"):
        return "PZF-" + cleaned[4:].capitalize()
    return cleaned
