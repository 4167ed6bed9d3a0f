"""Exact and semiclassical spectra of mean-field quantum spin Hamiltonians H = N P(2S/N)."""

__version__ = "0.1.0"

from .classical_opt import MinimumReport, minimize_on_ball, minimize_on_sphere, projected_hessian
from .eigensolve import SpectrumResult, assemble_spectrum, lowest_eigenpairs
from .errors import MFSpinError
from .model import NcPolynomial, builtin, curie_weiss, eval_classical, field, lmg, pspin, rotate
from .semiclassic import (
    LadderPrediction,
    ground_state_coefficients,
    ground_state_overlap_check,
    oscillator,
    oscillator_spectrum,
    predict,
    predict_interior,
)
from .spinblocks import BandedHermitian, build_block, multiplicity
from .thermo import exact_pressure, variational_pressure

__all__ = [
    "BandedHermitian",
    "LadderPrediction",
    "MFSpinError",
    "MinimumReport",
    "NcPolynomial",
    "SpectrumResult",
    "assemble_spectrum",
    "build_block",
    "builtin",
    "curie_weiss",
    "eval_classical",
    "exact_pressure",
    "field",
    "ground_state_coefficients",
    "ground_state_overlap_check",
    "lmg",
    "lowest_eigenpairs",
    "minimize_on_ball",
    "minimize_on_sphere",
    "multiplicity",
    "oscillator",
    "oscillator_spectrum",
    "predict",
    "predict_interior",
    "projected_hessian",
    "pspin",
    "rotate",
    "variational_pressure",
]
