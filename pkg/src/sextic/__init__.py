"""Perturbative, resummed and variational analysis of the quasi-exactly
solvable sextic oscillator H = p^2 + (1-12 lam) x^2 + 8 lam x^4 + 16 lam^2 x^6."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    DomainError,
    FitWindowError,
    NoiseFloorError,
    NonSummableError,
    PadeDegeneracyError,
    PoleError,
    ResourceLimitError,
    SexticError,
    SolverError,
)

__all__ = [
    "__version__",
    "DomainError",
    "FitWindowError",
    "NoiseFloorError",
    "NonSummableError",
    "PadeDegeneracyError",
    "PoleError",
    "ResourceLimitError",
    "SexticError",
    "SolverError",
]
