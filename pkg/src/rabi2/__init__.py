"""Exact spectrum of the two-photon Rabi model from four sector G-functions."""

__version__ = "0.1.0"

from rabi2.config import RunConfig
from rabi2.model import (
    SECTORS,
    CollapseGuardError,
    DerivedParams,
    DomainError,
    EvaluationError,
    ModelParams,
    Parity,
    Sector,
    derive,
    sector_seeds,
)

__all__ = [
    "SECTORS",
    "CollapseGuardError",
    "DerivedParams",
    "DomainError",
    "EvaluationError",
    "ModelParams",
    "Parity",
    "RunConfig",
    "Sector",
    "derive",
    "sector_seeds",
]
