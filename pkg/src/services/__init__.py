"""Services for the relay beamforming simulator"""
from .pzf_optimizer import PZFOptimizer
from .pipeline import ExperimentPipeline, run_experiment
from .config_loader import parse_config, preset_spec, PRESETS

__all__ = ["PZFOptimizer", "ExperimentPipeline", "run_experiment", "parse_config", "preset_spec", "PRESETS"]
