"""Probe-qubit thermalization: random-matrix and spin-chain models, quench dynamics and fluctuation-dissipation checks."""

from . import dynamics, estimators, linalg, models, theory

__all__ = ["linalg", "models", "dynamics", "theory", "estimators"]
__version__ = "0.1.0"
