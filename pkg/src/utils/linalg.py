"""Linear-algebra helpers shared by the beamformer designs"""
import numpy as np

from .errors import SingularChannelError


RANK_RTOL = 1e-12


def left_pseudoinverse(H: np.ndarray, rtol: float = RANK_RTOL) -> np.ndarray:
    """
    Moore-Penrose pseudoinverse H^+ of a full-column-rank matrix

    Args:
        H: M x N channel matrix, M >= N

    Returns:
        N x M matrix with H^+ H = I_N

    Raises:
        SingularChannelError: if H is rank deficient
    """
    rows, cols = H.shape
    if rows < cols:
        raise SingularChannelError(
            f"channel matrix of shape {H.shape} has fewer rows than columns"
        )

    U, s, Vh = np.linalg.svd(H, full_matrices=False)
    if s[0] == 0 or s[-1] <= rtol * s[0]:
        raise SingularChannelError(
            f"channel matrix of shape {H.shape} is not of full column rank "
            f"(condition number {s[0] / max(s[-1], np.finfo(float).tiny):.3e})"
        )
    return (Vh.conj().T / s) @ U.conj().T


def hermitian(X: np.ndarray) -> np.ndarray:
    """Conjugate transpose"""
    return X.conj().T
