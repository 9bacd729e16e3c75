"""Entangled photon pairs in dispersive fibre: temporal statistics and BB84 key rates."""
from .biphoton import BiphotonState, ComplexGrid, evaluate_grid, spectral_amplitude, temporal_amplitude
from .model import ConfigError, DetectorSpec, FiberSpec, LinkConfig, SourceSpec, load_config
from .qkd import NumericalGuardError, Scenario, key_rate, max_distance

__version__ = "0.1.0"

__all__ = [
    "BiphotonState",
    "ComplexGrid",
    "ConfigError",
    "DetectorSpec",
    "FiberSpec",
    "LinkConfig",
    "NumericalGuardError",
    "Scenario",
    "SourceSpec",
    "evaluate_grid",
    "key_rate",
    "load_config",
    "max_distance",
    "spectral_amplitude",
    "temporal_amplitude",
]
