"""Simulation and verification of hierarchical quantum information splitting."""

from .kernels import BACKEND
from .protocol import (
    BellOutcome,
    Correction,
    HelperBasis,
    InvalidCoalitionError,
    SecretSpec,
    build_chi,
    run_protocol,
)

__all__ = [
    "BACKEND",
    "BellOutcome",
    "Correction",
    "HelperBasis",
    "InvalidCoalitionError",
    "SecretSpec",
    "build_chi",
    "run_protocol",
]
__version__ = "0.1.0"
