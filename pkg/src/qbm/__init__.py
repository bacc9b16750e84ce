"""Non-Markovian quantum Brownian motion channel and Gaussian-probe metrology.

Modules:
    specfun: complex Ei, E1, Ci, Si, Shi.
    coeffs: damping and diffusion coefficients, non-Markovianity quantifier.
    channel: Gaussian states and their evolution through the channel.
    metrology: quantum Fisher information and Cramer-Rao bounds.
    scenario, cli: config-driven sweeps that write CSV datasets.
"""

from .channel import (
    CovMatrix,
    GaussianState,
    ProbeSpec,
    channel_curve,
    evolve,
    initial_correlated_state,
    purity,
)
from .coeffs import BathSpec, Regime, closed_form_coefficients, nonmarkovianity, quantifier
from .metrology import EstimationTarget, FdSpec, qcrb, qfi, qfi_curve, snl_gain
from .quadrature import QuadSpec
from .specfun import AccuracySpec, cosint_ci, expint_e1, expint_ei, sinhint_shi, sinint_si

__version__ = "0.1.0"

__all__ = [
    "AccuracySpec",
    "BathSpec",
    "CovMatrix",
    "EstimationTarget",
    "FdSpec",
    "GaussianState",
    "ProbeSpec",
    "QuadSpec",
    "Regime",
    "channel_curve",
    "closed_form_coefficients",
    "cosint_ci",
    "evolve",
    "expint_e1",
    "expint_ei",
    "initial_correlated_state",
    "nonmarkovianity",
    "purity",
    "qcrb",
    "qfi",
    "qfi_curve",
    "quantifier",
    "sinhint_shi",
    "sinint_si",
    "snl_gain",
]
