"""Pseudo-spectral lab for forced active scalar equations on the periodic torus."""

from .config import ConfigError, RunConfig, emit, load_config, parse_config
from .laws import SymbolLaw, apply_law, certify
from .norms import GevreyParams, estimate_radius, gevrey_norm, lp_norm, sobolev_norm
from .solver import SimulationState, picard, run, step
from .spectral import GridField, Lattice, SpectralField, forward, inverse

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "GevreyParams",
    "GridField",
    "Lattice",
    "RunConfig",
    "SimulationState",
    "SpectralField",
    "SymbolLaw",
    "apply_law",
    "certify",
    "emit",
    "estimate_radius",
    "forward",
    "gevrey_norm",
    "inverse",
    "load_config",
    "lp_norm",
    "parse_config",
    "picard",
    "run",
    "sobolev_norm",
    "step",
]
