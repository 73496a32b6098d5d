"""Numerical laboratory for periodic wave trains of reaction-diffusion systems.

Computes wave-train families and their dispersion relations, Bloch spectra
and stability certificates, Burgers/Cole-Hopf asymptotics with discrete
renormalization, and diffusive-mixing diagnostics on direct simulations.
"""

from .core import Field, PeriodicGrid, SpectralCoeffs
from .rdsys import RDSystem, make_lambda_omega, load_system
from .wavetrain import DispersionBranch, WaveTrain, continue_branch, solve_wave_train

__version__ = "0.1.0"

__all__ = [
    "Field",
    "PeriodicGrid",
    "SpectralCoeffs",
    "RDSystem",
    "make_lambda_omega",
    "load_system",
    "WaveTrain",
    "DispersionBranch",
    "solve_wave_train",
    "continue_branch",
]
