"""Relational entropic dynamics on periodic grids."""

__version__ = "0.1.0"

from .model import (
    ConfigPoint,
    Ensemble,
    EpistemicState,
    ScalarField,
    ShiftVelocity,
    SystemSpec,
    gradient,
    quadrature,
    wrap,
)

__all__ = [
    "ConfigPoint",
    "Ensemble",
    "EpistemicState",
    "ScalarField",
    "ShiftVelocity",
    "SystemSpec",
    "gradient",
    "quadrature",
    "wrap",
    "__version__",
]
