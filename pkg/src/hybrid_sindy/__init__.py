"""Identification of hybrid (regime-switching) dynamical systems by clustered
sparse regression with AICc model selection."""

__version__ = "0.1.0"

from .catalog import ModelCatalog
from .config import ConfigError, PipelineConfig, SweepConfig, load_pipeline_config, load_sweep_config
from .dynamics import TrajectorySet, simulate_hopper, simulate_sir
from .features import FeatureLibrary, build_library
from .pipeline import PipelineResult, run
from .regression import SparseModel, stlsq

__all__ = [
    "ConfigError", "FeatureLibrary", "ModelCatalog", "PipelineConfig", "PipelineResult",
    "SparseModel", "SweepConfig", "TrajectorySet", "build_library", "load_pipeline_config",
    "load_sweep_config", "run", "simulate_hopper", "simulate_sir", "stlsq",
]
