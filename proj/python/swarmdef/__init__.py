"""Defender control optimization against an attacking swarm under parameter uncertainty."""

from ._core import (
    Config,
    ConfigError,
    Control,
    SimulationError,
    __version__,
    hamiltonian,
    hamiltonian_convergence,
    objective,
    optimize,
    quadrature_rule,
    simulate,
    sweep,
)

__all__ = [
    "Config",
    "ConfigError",
    "Control",
    "SimulationError",
    "__version__",
    "hamiltonian",
    "hamiltonian_convergence",
    "objective",
    "optimize",
    "quadrature_rule",
    "simulate",
    "sweep",
]
