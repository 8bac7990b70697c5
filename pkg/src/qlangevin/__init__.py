"""Quantum Langevin equations for a linearly coupled point charge and a
radiation-pressure-coupled point scatterer (reduced units hbar = k_B = c = 1)."""
from ._backend import BACKEND
from .core import (ComplexSpectrum, FrequencyGrid, MechanicalSystem, ThermalState, BrownianKernel,
                   LinearCharge, Scatterer, AbrahamLorentz, make_grid, parse_grid,
                   spectrum_to_csv, spectrum_from_csv, spectrum_to_json, spectrum_from_json)
from .errors import (QLangevinError, InvalidArgumentError, DomainError, DivergenceError, ContourError,
                     StabilityError, UnsupportedContinuationError)
from .smatrix import PerfectReflector, ResonanceCutoff, Tabulated, parse_model

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    "ComplexSpectrum", "FrequencyGrid", "MechanicalSystem", "ThermalState", "BrownianKernel",
    "LinearCharge", "Scatterer", "AbrahamLorentz", "make_grid", "parse_grid",
    "spectrum_to_csv", "spectrum_from_csv", "spectrum_to_json", "spectrum_from_json",
    "QLangevinError", "InvalidArgumentError", "DomainError", "DivergenceError", "ContourError",
    "StabilityError", "UnsupportedContinuationError",
    "PerfectReflector", "ResonanceCutoff", "Tabulated", "parse_model",
]
