"""Partial zero-forcing beamformer optimization by modified gradient ascent"""
import csv
import logging
from typing import List, Optional, Callable, Sequence, Tuple

import numpy as np
from scipy import linalg

from ..models.schemas import (
    NetworkConfig,
    ZeroPattern,
    BeamformerSet,
    OptimizationMode,
    OptimizerConfig,
    StopRule,
    IterationRecord,
    OptimizationTrace,
)
from ..utils.errors import OptimizerError, SingularChannelError, DegenerateBeamformerError
from ..utils.linalg import left_pseudoinverse, hermitian
from .protocol import zero_pattern, selection_matrix, equivalent_channel
from .baselines import relay_power, mmse_beamformer
from .metrics import common_rates


logger = logging.getLogger(__name__)

CONDITION_LIMIT = 1e12
PATTERN_TOLERANCE = 1e-8


def slot_slices(pattern: ZeroPattern) -> List[slice]:
    """Position of each slot's free entries inside the concatenated vector x"""
    slices = []
    start = 0
    for n in range(1, pattern.n_users):
        stop = start + pattern.free_count(n)
        slices.append(slice(start, stop))
        start = stop
    return slices


def pack(matrices: Sequence[np.ndarray], pattern: ZeroPattern) -> np.ndarray:
    """
    Concatenate the free entries of A^(1)..A^(N-1), row-major per slot

    Args:
        matrices: N-1 equivalent channels respecting the pattern zeros
        pattern: Zero pattern of the network

    Returns:
        Complex vector x
    """
    if len(matrices) != pattern.n_users - 1:
        raise ValueError(f"expected {pattern.n_users - 1} matrices (got {len(matrices)})")
    parts = []
    for n, A in enumerate(matrices, 1):
        if np.any(A[pattern.mask(n)] != 0):
            raise ValueError(f"slot {n} matrix has nonzero entries at forced-zero positions")
        parts.append(np.asarray(A, dtype=complex)[pattern.free_mask(n)])
    return np.concatenate(parts)


def unpack(x: np.ndarray, pattern: ZeroPattern, n_users: int) -> List[np.ndarray]:
    """Inverse of pack; forced-zero positions are written as exact zeros"""
    slices = slot_slices(pattern)
    if len(x) != slices[-1].stop:
        raise ValueError(f"free vector must have length {slices[-1].stop} (got {len(x)})")
    return [
        _unpack_slot(x[s], pattern.free_mask(n), n_users)
        for n, s in enumerate(slices, 1)
    ]


def _unpack_slot(x_n: np.ndarray, free_mask: np.ndarray, n_users: int) -> np.ndarray:
    A = np.zeros((n_users, n_users), dtype=complex)
    A[free_mask] = x_n
    return A


def a_to_g(A: np.ndarray, H: np.ndarray, H_pinv: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Relay matrix (H^T)^+ A H^+ realizing the equivalent channel A

    Raises:
        SingularChannelError: if H is rank deficient or M < N
    """
    if H_pinv is None:
        H_pinv = left_pseudoinverse(H)
    return H_pinv.T @ A @ H_pinv


def reduced_dimensions(n_users: int, n: int) -> Tuple[int, int]:
    """(free, dependent) beamformer entry counts of slot n when M = N-1"""
    dependent = (n_users - n - 1) * n_users
    return (n_users - 1) ** 2 - dependent, dependent


def _slot_rates(A: np.ndarray, noise: np.ndarray, powers: np.ndarray) -> np.ndarray:
    """Interference-free log2(1 + P_i |a_ki|^2 / (||h_k^T G||^2 + 1)) for all (k, i)"""
    return np.log2(1.0 + powers[None, :] * np.abs(A) ** 2 / (noise[:, None] + 1.0))


class _EquivalentChannelGeometry:
    """Power and rate evaluation of A-parameterized relay matrices for one channel"""

    def __init__(self, H: np.ndarray, config: NetworkConfig, pattern: ZeroPattern):
        self.H = H
        self.config = config
        self.pattern = pattern
        self.powers = config.power_array
        self.H_pinv = left_pseudoinverse(H)

        covariance = (H * self.powers) @ hermitian(H) + np.eye(H.shape[0])
        # phi(A) = tr{R A Q A^H} since G = (H^+)^T A H^+
        self.R = self.H_pinv.conj() @ self.H_pinv.T
        self.Q = self.H_pinv @ covariance @ hermitian(self.H_pinv)

        self.free_masks = [pattern.free_mask(n) for n in range(1, config.n_users)]
        self.targets = [selection_matrix(config, n).astype(bool) for n in range(1, config.n_users)]
        self.slices = slot_slices(pattern)

    def slot_matrix(self, x_n: np.ndarray, n: int) -> np.ndarray:
        return _unpack_slot(x_n, self.free_masks[n - 1], self.config.n_users)

    def scale_slot(self, x_n: np.ndarray, n: int) -> np.ndarray:
        """Slot-n free entries rescaled to the relay power budget"""
        A = scale_to_power(self.slot_matrix(x_n, n), self.H, self.config, H_pinv=self.H_pinv)
        return A[self.free_masks[n - 1]]

    def slot_power(self, x_n: np.ndarray, n: int) -> float:
        A = self.slot_matrix(x_n, n)
        return float(np.real(np.sum((self.R @ A @ self.Q) * A.conj())))

    def slot_rates(self, x_n: np.ndarray, n: int) -> np.ndarray:
        A = self.slot_matrix(x_n, n)
        noise = np.sum(np.abs(A @ self.H_pinv) ** 2, axis=1)
        return _slot_rates(A, noise, self.powers)

    def slot_objective(self, x_n: np.ndarray, n: int) -> float:
        return float(np.sum(self.slot_rates(x_n, n)[self.targets[n - 1]]))

    def joint_objective(self, x: np.ndarray) -> float:
        pair_rates = np.zeros((self.config.n_users, self.config.n_users))
        for n, s in enumerate(self.slices, 1):
            pair_rates += np.where(self.targets[n - 1], self.slot_rates(x[s], n), 0.0)
        return float(np.sum(common_rates(pair_rates)))


class _ReducedSlotGeometry:
    """Slot-n relay matrices with M = N-1, parameterized by the leading entries y of g"""

    def __init__(self, H: np.ndarray, config: NetworkConfig, pattern: ZeroPattern, n: int):
        self.H = H
        self.config = config
        self.n = n
        self.powers = config.power_array
        self.M = H.shape[0]
        self.target = selection_matrix(config, n).astype(bool)

        zeros = sorted(pattern.for_slot(n))
        self.zero_rows = np.array([i - 1 for i, _ in zeros], dtype=int)
        self.zero_cols = np.array([j - 1 for _, j in zeros], dtype=int)
        self.n_dependent = len(zeros)
        self.n_free = self.M * self.M - self.n_dependent
        if self.n_free < 1:
            raise SingularChannelError(
                f"slot {n} has {self.n_dependent} constraints but only {self.M * self.M} beamformer entries"
            )

        if self.n_dependent:
            # [H^T G H]_ij = kron(h_i, h_j) . vec(G) with row-major vec
            constraints = np.array([np.kron(H[:, i - 1], H[:, j - 1]) for i, j in zeros])
            free_part = constraints[:, :self.n_free]
            dependent_part = constraints[:, self.n_free:]
            condition = np.linalg.cond(dependent_part)
            if not np.isfinite(condition) or condition > CONDITION_LIMIT:
                raise SingularChannelError(
                    f"slot {n} constraint system is singular (condition number {condition:.3e})"
                )
            self.lu = linalg.lu_factor(dependent_part)
            self.free_part = free_part

    def relay_matrix(self, y: np.ndarray) -> np.ndarray:
        if self.n_dependent:
            r = -linalg.lu_solve(self.lu, self.free_part @ y)
            g = np.concatenate([y, r])
        else:
            g = y
        return g.reshape(self.M, self.M)

    def power(self, y: np.ndarray) -> float:
        return relay_power(self.relay_matrix(y), self.H, self.powers)

    def scale(self, y: np.ndarray) -> np.ndarray:
        # G is linear in y, so scaling G scales y by the same factor
        G = scale_to_power(self.relay_matrix(y), self.H, self.config, equivalent=False)
        return G.ravel()[:self.n_free]

    def objective(self, y: np.ndarray) -> float:
        G = self.relay_matrix(y)
        A = equivalent_channel(self.H, G)
        noise = np.sum(np.abs(self.H.T @ G) ** 2, axis=1)
        return float(np.sum(_slot_rates(A, noise, self.powers)[self.target]))

    def pattern_residual(self, G: np.ndarray) -> float:
        """Largest forced-zero entry of H^T G H relative to its Frobenius norm"""
        if not self.n_dependent:
            return 0.0
        A = equivalent_channel(self.H, G)
        return float(np.max(np.abs(A[self.zero_rows, self.zero_cols])) / np.linalg.norm(A))


def modified_gradient_of(
    func: Callable[[np.ndarray], float],
    power_fn: Callable[[np.ndarray, int], float],
    x: np.ndarray,
    slices: Sequence[slice],
    power_budget: float,
    normalize: bool = True,
    clamp: bool = False,
    fd_scale: float = 1e-5,
    base_value: Optional[float] = None
) -> np.ndarray:
    """
    Forward-difference gradient with power-normalized perturbations

    Each real and imaginary perturbation x + eps*e_m is divided by
    alpha = phi(perturbed slot) / P_R before the objective is evaluated.

    Args:
        func: Objective of the full vector x
        power_fn: Relay power of one slot's sub-vector, called as power_fn(x_n, n)
        x: Current point
        slices: Sub-vector of each slot inside x (slot n is slices[n-1])
        power_budget: Relay power P_R
        normalize: Apply the alpha division (False gives the plain difference quotient)
        clamp: Never divide by alpha < 1
        fd_scale: Relative perturbation size, eps = fd_scale * max(1, |x_m|)
        base_value: func(x) if already known

    Returns:
        Complex vector of the same length as x
    """
    f0 = func(x) if base_value is None else base_value
    gradient = np.zeros(len(x), dtype=complex)

    for n, s in enumerate(slices, 1):
        for m in range(s.start, s.stop):
            eps = fd_scale * max(1.0, abs(x[m]))
            partials = []
            for direction in (1.0, 1j):
                perturbed = x.copy()
                perturbed[m] += direction * eps
                if normalize:
                    alpha = power_fn(perturbed[s], n) / power_budget
                    if clamp:
                        alpha = max(alpha, 1.0)
                    perturbed[s] = perturbed[s] / alpha
                partials.append((func(perturbed) - f0) / eps)
            gradient[m] = partials[0] + 1j * partials[1]
    return gradient


def objective(
    x: np.ndarray,
    H: np.ndarray,
    config: NetworkConfig,
    mode: OptimizationMode = OptimizationMode.JOINT,
    slot: Optional[int] = None
) -> float:
    """
    Interference-free PZF objective

    Args:
        x: Full free vector (joint) or slot vector x^(n) (separate)
        H: M x N channel with M >= N
        config: Network configuration
        mode: JOINT sums the per-source min-rates; SEPARATE sums slot n's pair rates
        slot: Slot index for SEPARATE

    Returns:
        Objective value in bits per channel use
    """
    geometry = _EquivalentChannelGeometry(H, config, zero_pattern(config))
    if OptimizationMode(mode) == OptimizationMode.JOINT:
        return geometry.joint_objective(x)
    if slot is None:
        raise ValueError("separate objective needs a slot index")
    return geometry.slot_objective(x, slot)


def modified_gradient(
    x: np.ndarray,
    H: np.ndarray,
    config: NetworkConfig,
    mode: OptimizationMode = OptimizationMode.JOINT,
    slot: Optional[int] = None,
    fd_scale: float = 1e-5,
    normalize: bool = True,
    clamp: bool = False
) -> np.ndarray:
    """Modified gradient D(f, x) of the joint objective, or of slot n's sum-rate"""
    geometry = _EquivalentChannelGeometry(H, config, zero_pattern(config))
    if OptimizationMode(mode) == OptimizationMode.JOINT:
        return modified_gradient_of(
            geometry.joint_objective, geometry.slot_power, x, geometry.slices,
            config.relay_power, normalize, clamp, fd_scale
        )
    if slot is None:
        raise ValueError("separate gradient needs a slot index")
    return modified_gradient_of(
        lambda v: geometry.slot_objective(v, slot),
        lambda v, _: geometry.slot_power(v, slot),
        x, [slice(0, len(x))], config.relay_power, normalize, clamp, fd_scale
    )


def scale_to_power(
    matrix: np.ndarray,
    H: np.ndarray,
    config: NetworkConfig,
    equivalent: bool = True,
    H_pinv: Optional[np.ndarray] = None
) -> np.ndarray:
    """
    Rescale an equivalent channel A (or a relay matrix G) to relay power P_R

    Args:
        matrix: A (N x N) when equivalent is True, otherwise G (M x M)
        H: Channel matrix
        config: Network configuration
        equivalent: Whether matrix is an equivalent channel
        H_pinv: Precomputed pseudoinverse of H

    Returns:
        Positively scaled copy meeting the power budget with equality

    Raises:
        DegenerateBeamformerError: for an all-zero or non-finite input
    """
    if not np.all(np.isfinite(matrix)) or not np.any(matrix):
        raise DegenerateBeamformerError("cannot scale an all-zero or non-finite matrix to the power budget")
    G = a_to_g(matrix, H, H_pinv) if equivalent else matrix
    power = relay_power(G, H, config.power_array)
    if not np.isfinite(power) or power <= 0:
        raise DegenerateBeamformerError(f"cannot scale a beamformer with relay power {power}")
    return matrix * np.sqrt(config.relay_power / power)


def write_trace_csv(trace: OptimizationTrace, path: str):
    """Export an optimizer trace (one row per committed iterate)"""
    fields = ["iteration", "slot", "objective", "power", "gradient_norm", "step"]
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=fields)
        writer.writeheader()
        for record in trace.records:
            writer.writerow(record.to_dict())


class PZFOptimizer:
    """Synthesizes PZF relay matrices by modified gradient ascent from a closed-form start"""

    def __init__(self, config: NetworkConfig, options: Optional[OptimizerConfig] = None):
        """
        Initialize the optimizer

        Args:
            config: Network configuration
            options: Ascent parameters (separate scheme defaults when omitted)
        """
        self.config = config
        self.options = options or OptimizerConfig()
        self.pattern = zero_pattern(config)
        self.last_trace: Optional[OptimizationTrace] = None

    def optimize(self, H: np.ndarray, trace_callback=None) -> BeamformerSet:
        """Run the scheme selected by the optimizer options"""
        if self.options.mode == OptimizationMode.JOINT:
            return self.optimize_joint(H, trace_callback)
        if self.options.mode == OptimizationMode.REDUCED:
            return self.optimize_reduced(H, trace_callback)
        return self.optimize_separate(H, trace_callback)

    def optimize_joint(self, H: np.ndarray, trace_callback=None) -> BeamformerSet:
        """
        Ascend the network objective over all slots at once, starting from ZF

        Args:
            H: M x N channel with M >= N
            trace_callback: Optional callback for tracing

        Returns:
            BeamformerSet tagged "PZF-Joint"
        """
        def trace(message):
            logger.info(message)
            if trace_callback:
                trace_callback(message)

        geometry = _EquivalentChannelGeometry(H, self.config, self.pattern)
        history = OptimizationTrace(mode=OptimizationMode.JOINT)
        x = self._zf_vector(geometry)

        def rescale_all(v):
            out = v.copy()
            for n, s in enumerate(geometry.slices, 1):
                out[s] = geometry.scale_slot(v[s], n)
            return out

        trace(f"[PZF] Joint optimization over {len(x)} free entries")
        x, value, iterations = self._ascend(
            x,
            geometry.joint_objective,
            geometry.slot_power,
            geometry.slices,
            rescale_all,
            lambda v: max(geometry.slot_power(v[s], n) for n, s in enumerate(geometry.slices, 1)),
            history,
            slot=None,
        )
        history.iterations = iterations
        self.last_trace = history
        trace(f"[PZF] ✓ Joint objective {value:.4f} after {iterations} iterations")

        matrices = [
            a_to_g(geometry.slot_matrix(x[s], n), H, geometry.H_pinv)
            for n, s in enumerate(geometry.slices, 1)
        ]
        return BeamformerSet(
            matrices=matrices,
            design="PZF-Joint",
            metadata={"iterations": iterations, "objective": value, "trace": history},
        )

    def optimize_separate(self, H: np.ndarray, trace_callback=None) -> BeamformerSet:
        """
        Maximize each slot's sum-rate in turn, every slot starting from ZF

        Each slot keeps the iterate of its ascent with the highest network
        objective (later slots still at ZF), so the result never falls
        below the all-ZF starting point.

        Args:
            H: M x N channel with M >= N
            trace_callback: Optional callback for tracing

        Returns:
            BeamformerSet tagged "PZF-Separate"
        """
        def trace(message):
            logger.info(message)
            if trace_callback:
                trace_callback(message)

        geometry = _EquivalentChannelGeometry(H, self.config, self.pattern)
        history = OptimizationTrace(mode=OptimizationMode.SEPARATE)
        x = self._zf_vector(geometry)
        start_network = geometry.joint_objective(x)

        slot_iterations = []
        slot_objectives = []
        for n, s in enumerate(geometry.slices, 1):
            trace(f"[PZF] Slot {n}: optimizing {s.stop - s.start} free entries")

            def network_value(v, s=s):
                candidate = x.copy()
                candidate[s] = v
                return geometry.joint_objective(candidate)

            x_n, value, iterations = self._ascend(
                x[s].copy(),
                lambda v, n=n: geometry.slot_objective(v, n),
                lambda v, _, n=n: geometry.slot_power(v, n),
                [slice(0, s.stop - s.start)],
                lambda v, n=n: geometry.scale_slot(v, n),
                lambda v, n=n: geometry.slot_power(v, n),
                history,
                slot=n,
                keep_best=network_value,
            )
            x[s] = x_n
            slot_iterations.append(iterations)
            slot_objectives.append(value)
            trace(f"[PZF] Slot {n}: sum-rate {value:.4f} after {iterations} iterations")

        network = geometry.joint_objective(x)
        history.iterations = sum(slot_iterations)
        self.last_trace = history
        trace(f"[PZF] ✓ Separate optimization complete ({history.iterations} iterations, "
              f"network objective {start_network:.4f} -> {network:.4f})")

        matrices = [
            a_to_g(geometry.slot_matrix(x[s], n), H, geometry.H_pinv)
            for n, s in enumerate(geometry.slices, 1)
        ]
        return BeamformerSet(
            matrices=matrices,
            design="PZF-Separate",
            metadata={
                "iterations": history.iterations,
                "slot_iterations": slot_iterations,
                "slot_objectives": slot_objectives,
                "objective": network,
                "trace": history,
            },
        )

    def optimize_reduced(self, H: np.ndarray, trace_callback=None) -> BeamformerSet:
        """
        Separate scheme for M = N-1 over the free beamformer entries

        The dependent entries of each slot are eliminated through the
        forced-zero constraints; ascent starts from the MMSE beamformer.

        Args:
            H: (N-1) x N channel matrix
            trace_callback: Optional callback for tracing

        Returns:
            BeamformerSet tagged "PZF-Reduced"

        Raises:
            SingularChannelError: if a constraint system is singular
            OptimizerError: if a solution violates the zero pattern
        """
        def trace(message):
            logger.info(message)
            if trace_callback:
                trace_callback(message)

        M, N = H.shape
        if M != N - 1:
            raise ValueError(f"reduced scheme needs M = N-1 antennas (got M={M}, N={N})")

        history = OptimizationTrace(mode=OptimizationMode.REDUCED)

        matrices = []
        slot_iterations = []
        for n in range(1, N):
            geometry = _ReducedSlotGeometry(H, self.config, self.pattern, n)
            y = geometry.scale(mmse_beamformer(H, self.config, n).ravel()[:geometry.n_free])
            trace(f"[PZF] Slot {n}: {geometry.n_free} free / {geometry.n_dependent} dependent entries")

            y, value, iterations = self._ascend(
                y,
                geometry.objective,
                lambda v, _, geometry=geometry: geometry.power(v),
                [slice(0, len(y))],
                geometry.scale,
                geometry.power,
                history,
                slot=n,
            )

            G = geometry.relay_matrix(y)
            residual = geometry.pattern_residual(G)
            if residual >= PATTERN_TOLERANCE:
                raise OptimizerError(f"slot {n} violates the zero pattern (relative residual {residual:.3e})")
            slot_iterations.append(iterations)
            matrices.append(G)
            trace(f"[PZF] Slot {n}: sum-rate {value:.4f} after {iterations} iterations")

        history.iterations = sum(slot_iterations)
        self.last_trace = history
        trace(f"[PZF] ✓ Reduced optimization complete ({history.iterations} iterations)")
        return BeamformerSet(
            matrices=matrices,
            design="PZF-Reduced",
            metadata={"iterations": history.iterations, "slot_iterations": slot_iterations, "trace": history},
        )

    def _zf_vector(self, geometry: _EquivalentChannelGeometry) -> np.ndarray:
        """Free vector of the ZF equivalent channels (1/p) S^(n) at the power budget"""
        parts = []
        for n in range(1, self.config.n_users):
            S = selection_matrix(self.config, n).astype(complex)
            parts.append(geometry.scale_slot(S[geometry.free_masks[n - 1]], n))
        return np.concatenate(parts)

    def _ascend(
        self,
        x: np.ndarray,
        func: Callable[[np.ndarray], float],
        power_fn: Callable[[np.ndarray, int], float],
        slices: Sequence[slice],
        rescale: Callable[[np.ndarray], np.ndarray],
        power_of: Callable[[np.ndarray], float],
        history: OptimizationTrace,
        slot: Optional[int],
        keep_best: Optional[Callable[[np.ndarray], float]] = None
    ) -> Tuple[np.ndarray, float, int]:
        """
        Modified gradient ascent with step halving

        The step size is the length of the move relative to ||x||, taken
        along the modified gradient before rescaling to the power budget.

        Args:
            keep_best: Score of an iterate; when given, the committed iterate
                (start included) with the highest score is returned instead
                of the last one

        Returns:
            (selected point, its objective, committed iterations)
        """
        opts = self.options
        value = func(x)
        if not np.isfinite(value):
            raise OptimizerError(f"objective is not finite at the starting point ({value})")
        history.records.append(IterationRecord(0, slot, value, power_of(x), 0.0, 0.0))

        best = (keep_best(x), x, value) if keep_best else None
        first_gain = None
        iterations = 0
        while iterations < opts.max_iterations:
            direction = modified_gradient_of(
                func, power_fn, x, slices, self.config.relay_power,
                normalize=True, clamp=opts.clamp_normalization,
                fd_scale=opts.fd_scale, base_value=value,
            )
            if not np.all(np.isfinite(direction)):
                raise OptimizerError(f"gradient is not finite at iteration {iterations + 1}")
            gradient_norm = float(np.linalg.norm(direction))
            if gradient_norm == 0.0:
                break
            if opts.stop_rule == StopRule.GRADIENT and gradient_norm < opts.gradient_tolerance:
                break
            move = direction * (np.linalg.norm(x) / gradient_norm)

            step = opts.step_size
            accepted = None
            for _ in range(opts.max_halvings + 1):
                candidate = rescale(x + step * move)
                candidate_value = func(candidate)
                if not np.isfinite(candidate_value):
                    raise OptimizerError(
                        f"objective became non-finite at iteration {iterations + 1} (step {step:.3e})"
                    )
                if candidate_value >= value:
                    accepted = candidate
                    break
                step /= 2.0
            if accepted is None:
                logger.debug(f"No ascent step found after {opts.max_halvings} halvings")
                break

            gain = candidate_value - value
            x, value = accepted, candidate_value
            iterations += 1
            history.records.append(
                IterationRecord(iterations, slot, value, power_of(x), gradient_norm, step)
            )
            logger.debug(
                f"iter {iterations} slot={slot} f={value:.6f} gain={gain:.3e} "
                f"|D|={gradient_norm:.3e} step={step:.3e}"
            )
            if keep_best:
                score = keep_best(x)
                if score >= best[0]:
                    best = (score, x, value)

            if opts.stop_rule == StopRule.IMPROVEMENT:
                if first_gain is None:
                    first_gain = gain
                if gain <= 0 or gain < opts.improvement_threshold * first_gain:
                    break

        if best is not None:
            _, x, value = best
        return x, value, iterations
