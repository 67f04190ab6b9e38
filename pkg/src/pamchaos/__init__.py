"""Numerical engine for the parabolic Anderson equation driven by fractional Gaussian noise."""

from .errors import PamError
from .params import HurstParams, SolvabilityVerdict, Verdict, classify, validate

__version__ = "0.1.0"

__all__ = ["HurstParams", "PamError", "SolvabilityVerdict", "Verdict", "classify", "validate",
           "__version__"]
