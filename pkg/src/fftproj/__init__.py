"""Compatibility projection for FFT-based homogenization with local-support derivatives."""

from .grid import Grid, TensorField
from .materials import Phase, PhaseMap
from .projection import (
    FINITE_STRAIN,
    SMALL_STRAIN,
    InadmissibleSchemeError,
    ProjectionOperator,
    build_projection,
    build_small_strain_projection,
)
from .solver import LoadCase, SolveResult, SolverConfig, solve, solve_damage
from .stencils import SCHEMES, DerivativeScheme

__all__ = [
    "FINITE_STRAIN",
    "SCHEMES",
    "SMALL_STRAIN",
    "DerivativeScheme",
    "Grid",
    "InadmissibleSchemeError",
    "LoadCase",
    "Phase",
    "PhaseMap",
    "ProjectionOperator",
    "SolveResult",
    "SolverConfig",
    "TensorField",
    "build_projection",
    "build_small_strain_projection",
    "solve",
    "solve_damage",
]
