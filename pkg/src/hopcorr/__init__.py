"""Mean-field solver and finite-size oracles for the relativistic Hopfield
network with cyclically correlated patterns."""

from .correlation import apply_x, build_x, char_poly_value, rotate_patterns, spectrum
from .meanfield import Model, SolverConfig, critical_temperature, pressure, solve
from .model import ModelParams, PatternSet, SpinSystem, exact_pressure, mattis
from .phases import PhaseLabel, classify, find_tc, multi_start, sweep

__version__ = "0.1.0"

__all__ = [
    "Model", "ModelParams", "PatternSet", "PhaseLabel", "SolverConfig", "SpinSystem",
    "apply_x", "build_x", "char_poly_value", "classify", "critical_temperature",
    "exact_pressure", "find_tc", "mattis", "multi_start", "pressure", "rotate_patterns",
    "solve", "spectrum", "sweep",
]
