"""Example usage of the simulator programmatically"""
import dataclasses

import numpy as np

from src.models.schemas import NetworkConfig, Design, OptimizationMode, OptimizerConfig, CancellationMode
from src.services.protocol import generate_channel, zero_pattern
from src.services.designs import build_beamformers, design_factory
from src.services.metrics import rate_report
from src.services.pzf_optimizer import PZFOptimizer
from src.services.link_sim import simulate_ser
from src.services.config_loader import preset_spec
from src.services.pipeline import ExperimentPipeline


def main():
    """Compare ZF and PZF on one channel realization"""

    config = NetworkConfig.homogeneous(n_users=3, n_antennas=3, snr_db=10.0)
    rng = np.random.default_rng(7)
    H = generate_channel(config, rng)

    print("Forced-zero entries per slot:")
    pattern = zero_pattern(config)
    for n in range(1, config.n_users):
        print(f"  slot {n}: {sorted(pattern.for_slot(n))}")

    print("\n" + "="*60)
    print("SUM-RATES AT 10 dB")
    print("="*60)

    for design in (Design.ZF, Design.MMSE, Design.MF, Design.PZF_JOINT, Design.PZF_SEPARATE):
        beamformers = build_beamformers(design, H, config)
        report = rate_report(H, beamformers, config)
        iterations = f" ({beamformers.iterations} iterations)" if beamformers.iterations is not None else ""
        print(f"  {design.value:<13} {report.sum_rate:.3f} bits/channel use{iterations}")

    print("\n" + "="*60)


def example_convergence_trace():
    """Example of inspecting an optimizer trace"""
    config = NetworkConfig.homogeneous(n_users=3, n_antennas=3, snr_db=10.0)
    H = generate_channel(config, np.random.default_rng(11))

    print("\nConvergence Example")
    print("-" * 60)

    optimizer = PZFOptimizer(config, OptimizerConfig(mode=OptimizationMode.SEPARATE))
    optimizer.optimize(H, trace_callback=print)

    for slot in range(1, config.n_users):
        objectives = optimizer.last_trace.objectives(slot)
        print(f"Slot {slot}: {objectives[0]:.4f} -> {objectives[-1]:.4f} in {len(objectives) - 1} steps")


def example_ser():
    """Example of a short SER run with realistic and genie-aided cancellation"""
    config = NetworkConfig.homogeneous(n_users=3, n_antennas=3)

    print("\nSER Example")
    print("-" * 60)

    results = simulate_ser(
        config,
        design_factory(Design.PZF_SEPARATE),
        snr_grid=[10.0, 15.0],
        trials=20,
        seed=3,
        modes=(CancellationMode.REALISTIC, CancellationMode.GENIE),
        blocks_per_channel=100,
    )
    for result in results:
        print(f"  {result.snr_db:>4g} dB {result.mode.value:<9} SER {result.aggregate_ser:.4f}")


def example_preset():
    """Example of running a preset with fewer trials"""
    print("\nPreset Example")
    print("-" * 60)

    spec = dataclasses.replace(preset_spec("fig9"), trials=10, snr_db=(10.0,))
    rows = ExperimentPipeline(spec).run()
    for row in rows:
        print(f"  {row.design:<28} {row.metric_name:<10} {row.mean:.3f} ± {row.stderr:.3f}")


if __name__ == "__main__":
    print("PZF Relay Simulator - Example Usage")
    print("=" * 60)

    try:
        main()
        example_convergence_trace()
        example_ser()
        example_preset()
    except Exception as e:
        print(f"\nError: {str(e)}")
