"""Simulation and numerical verification of long-range dependent linear
processes with values in a discretized function space."""

from .defaults import DEFAULTS, SCHEMA_VERSION
from .grid import GridSpace, uniform_grid
from .model import InnovationModel, MemoryProfile, Regime, classify_regime
from .process import ProcessConfig, SamplePath, simulate

__version__ = "0.1.0"

__all__ = [
    "DEFAULTS",
    "SCHEMA_VERSION",
    "GridSpace",
    "uniform_grid",
    "InnovationModel",
    "MemoryProfile",
    "Regime",
    "classify_regime",
    "ProcessConfig",
    "SamplePath",
    "simulate",
    "__version__",
]
