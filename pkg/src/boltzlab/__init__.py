"""Particle simulation and exponent bookkeeping for a planar Boltzmann-type
jump equation with hard potentials and non-cutoff angular kernels."""

__version__ = "0.1.0"

from ._backend import BACKEND
from .errors import ConfigError, DomainError, FitError
from .kernel import CutoffSchedule, KernelParams

__all__ = ["BACKEND", "ConfigError", "CutoffSchedule", "DomainError", "FitError", "KernelParams", "__version__"]
