"""Ferromagnetic Ising model on locally tree-like random graphs.

Thermodynamic limits (pressure, magnetization, internal energy,
susceptibility) are computed from the cavity fixed point by population
dynamics, and checked against exact enumeration, tree recursions and
Glauber dynamics on finite graphs.
"""

from bethe_ising.errors import (
    BetheIsingError,
    InvalidProbability,
    NotConverged,
    SizeExplosion,
    SizeMismatch,
    StepTooSmall,
    TooLarge,
    ZeroMean,
)

__version__ = "0.1.0"

__all__ = [
    "BetheIsingError",
    "InvalidProbability",
    "NotConverged",
    "SizeExplosion",
    "SizeMismatch",
    "StepTooSmall",
    "TooLarge",
    "ZeroMean",
]
