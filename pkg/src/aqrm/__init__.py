"""Anisotropic open quantum Rabi model: mean field, fluctuations, semiclassical and Lindblad dynamics."""

from . import dynamics, fluctuations, lines, meanfield, params, quantum, wigner
from .errors import (
    BoundaryDivergence,
    DegenerateSteadyState,
    DimensionMismatch,
    FitDegenerate,
    InvalidParams,
    NoSolution,
    TruncationUnsafe,
)
from .params import ModelParams, RenormalizedParams, renormalize

__version__ = "0.1.0"

__all__ = [
    "BoundaryDivergence",
    "DegenerateSteadyState",
    "DimensionMismatch",
    "FitDegenerate",
    "InvalidParams",
    "ModelParams",
    "NoSolution",
    "RenormalizedParams",
    "TruncationUnsafe",
    "dynamics",
    "fluctuations",
    "lines",
    "meanfield",
    "params",
    "quantum",
    "renormalize",
    "wigner",
]
