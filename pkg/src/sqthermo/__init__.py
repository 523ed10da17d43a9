"""Thermodynamics of a bosonic mode coupled to a squeezed thermal reservoir.

Units throughout: hbar = k_B = 1 and the cold-side frequency omega_1 = 1.
"""

from .params import ModeSpec, ReservoirSpec, SqueezeParams, thermal_occupation
from .gaussian import GaussianState

__all__ = [
    "GaussianState",
    "ModeSpec",
    "ReservoirSpec",
    "SqueezeParams",
    "thermal_occupation",
]

__version__ = "0.1.0"
