"""Simulation and stability certificates for hybrid pantograph stochastic functional equations."""

from ._core import (
    Batch,
    Error,
    certify_exponential,
    check_existence,
    check_ito,
    estimate,
    occupation_fractions,
    presets,
    simulate,
    solve_epsilon_exponential,
    solve_epsilon_polynomial,
    stationary_distribution,
)

__all__ = [
    "Batch",
    "Error",
    "certify_exponential",
    "check_existence",
    "check_ito",
    "estimate",
    "occupation_fractions",
    "presets",
    "simulate",
    "solve_epsilon_exponential",
    "solve_epsilon_polynomial",
    "stationary_distribution",
]

__version__ = "0.1.0"
