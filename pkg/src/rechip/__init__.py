"""rechip: photon-level simulator for a reconfigurable two-qubit waveguide chip.

The package models a six-waveguide circuit carrying two dual-rail photonic
qubits through a postselected CNOT, with eight thermo-optic phase shifters
as the control surface.  It provides two cross-validating models (gate-level
algebra and full two-photon waveguide simulation), a stochastic noise layer,
heater calibration fits, maximum-likelihood state tomography, and experiment
drivers (random-configuration benchmark, Bell states, CHSH manifold, mixed
single-qubit states, HOM dip).
"""

from .chip import (
    PhaseConfig,
    CoincidenceProbs,
    h_prime,
    u_prep,
    u_cnot,
    two_qubit_unitary,
    default_netlist,
    verify_cnot,
    coincidence_probs,
)
from .noise import NoiseModel, CountRecord, SpectralModel
from .optics import Coupler, Phase, Netlist

__version__ = "0.1.0"

__all__ = [
    "PhaseConfig",
    "CoincidenceProbs",
    "NoiseModel",
    "CountRecord",
    "SpectralModel",
    "Coupler",
    "Phase",
    "Netlist",
    "h_prime",
    "u_prep",
    "u_cnot",
    "two_qubit_unitary",
    "default_netlist",
    "verify_cnot",
    "coincidence_probs",
    "__version__",
]
