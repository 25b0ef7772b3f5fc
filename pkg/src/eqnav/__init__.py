"""Symmetry-based equivariant filtering for biased inertial navigation."""

from . import filters, ins, lie, metrics, sim, symmetry
from .filters import FilterState, NoiseConfig, PositionMeasurement
from .ins import Gravity, InsInput, InsState
from .symmetry import SymmetryElement, SymmetryKind

__version__ = "0.1.0"

__all__ = [
    "FilterState",
    "Gravity",
    "InsInput",
    "InsState",
    "NoiseConfig",
    "PositionMeasurement",
    "SymmetryElement",
    "SymmetryKind",
    "filters",
    "ins",
    "lie",
    "metrics",
    "sim",
    "symmetry",
    "__version__",
]
