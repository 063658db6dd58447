"""Command line for the PZF relay beamforming simulator"""
import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

from dotenv import load_dotenv

from src import __version__
from src.models.schemas import ExperimentKind, ExperimentSpec
from src.services.config_loader import PRESETS, parse_config, preset_spec, default_spec
from src.services.pipeline import ExperimentPipeline
from src.utils.errors import ConfigError, SimulationError


logger = logging.getLogger(__name__)

DESCRIPTIONS = {
    ExperimentKind.SUM_RATE: "Average sum-rate versus SNR",
    ExperimentKind.SER: "Symbol-error rate versus SNR",
    ExperimentKind.USER_COUNT: "Sum-rate or SER versus number of users",
    ExperimentKind.SCHEDULING: "Unicast, counter-clockwise and hybrid schedules compared",
    ExperimentKind.REDUCED: "Relay antenna settings (MxN) compared, including M = N-1",
}


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per experiment kind"""
    parser = argparse.ArgumentParser(
        prog="pzf-sim",
        description="Monte Carlo simulator for multi-way relay beamforming"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for kind in ExperimentKind:
        sub = subparsers.add_parser(kind.value, help=DESCRIPTIONS[kind])
        source = sub.add_mutually_exclusive_group()
        source.add_argument("--config", help="Experiment document (KEY=VALUE lines)")
        source.add_argument("--preset", choices=sorted(PRESETS), help="Named experiment preset")
        sub.add_argument("--seed", type=int, default=None, help="Master seed (env PZF_SEED)")
        sub.add_argument("--trials", type=int, default=None, help="Channel realizations per grid point")
        sub.add_argument("--out", default=None, help="Output CSV path")
        sub.add_argument("--workers", type=int, default=None, help="Trial threads (env PZF_WORKERS)")
        sub.add_argument("--log-level", default=None, help="Logging level (env PZF_LOG_LEVEL)")
        sub.add_argument("--progress", action="store_true", help="Show progress bars")
        sub.add_argument("--trace-out", default=None, help="Export the optimizer trace of trial 0 (first PZF design) as CSV")

    return parser


def resolve_spec(args: argparse.Namespace) -> ExperimentSpec:
    """
    Build the experiment spec from --config/--preset and command-line overrides

    Args:
        args: Parsed arguments

    Returns:
        ExperimentSpec for the selected subcommand

    Raises:
        ConfigError: for invalid documents or a subcommand/experiment mismatch
    """
    kind = ExperimentKind(args.command)

    if args.config:
        with open(args.config, encoding="utf-8") as handle:
            spec = parse_config(handle.read())
        source = args.config
    elif args.preset:
        spec = preset_spec(args.preset)
        source = f"preset '{args.preset}'"
    else:
        spec = default_spec(kind)
        source = "defaults"

    if spec.kind != kind:
        raise ConfigError(
            f"{source} describes a '{spec.kind.value}' experiment, not '{kind.value}'",
            field="experiment"
        )

    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    elif "seed" in spec.defaults_applied and os.getenv("PZF_SEED"):
        overrides["seed"] = int(os.getenv("PZF_SEED"))
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.out is not None:
        overrides["output"] = args.out

    if not overrides:
        return spec
    defaulted = tuple(k for k in spec.defaults_applied if k not in overrides)
    try:
        return dataclasses.replace(spec, defaults_applied=defaulted, **overrides)
    except ValueError as e:
        raise ConfigError(str(e))


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    load_dotenv()
    args = build_parser().parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or os.getenv("PZF_LOG_LEVEL", "INFO")).upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )

    try:
        spec = resolve_spec(args)
        workers = args.workers if args.workers is not None else int(os.getenv("PZF_WORKERS", "1"))
        pipeline = ExperimentPipeline(spec, workers=workers, progress=args.progress)
        rows = pipeline.run()
        path = pipeline.write_csv(rows)
        if args.trace_out:
            pipeline.write_trace(args.trace_out)
    except (ConfigError, OSError) as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except (SimulationError, ValueError) as e:
        logger.error(f"Simulation failed: {e}")
        return 1

    print(f"Wrote {len(rows)} rows to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
