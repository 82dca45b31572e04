"""Phase estimation in an SU(1,1) interferometer with number-conserving operations."""

from .errors import (
    CapabilityError,
    DegenerateStateError,
    DivergentSensitivityError,
    DomainError,
    GridTooSmallError,
    NumericError,
    TruncationError,
)
from .model import PA_THEN_PS, PS_THEN_PA, STANDARD, InterferometerParams, SchemeSpec
from .moments import GenFunParams, MomentTable, build_w4, normalization_A, p_moment
from .qfi import cq_of_lambda, qcrb, qfi_ideal, qfi_lossy
from .sensitivity import hl, mean_photon_inside, phase_sensitivity, sql

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "DegenerateStateError",
    "DivergentSensitivityError",
    "DomainError",
    "GenFunParams",
    "GridTooSmallError",
    "InterferometerParams",
    "MomentTable",
    "NumericError",
    "PA_THEN_PS",
    "PS_THEN_PA",
    "STANDARD",
    "SchemeSpec",
    "TruncationError",
    "build_w4",
    "cq_of_lambda",
    "hl",
    "mean_photon_inside",
    "normalization_A",
    "p_moment",
    "phase_sensitivity",
    "qcrb",
    "qfi_ideal",
    "qfi_lossy",
    "sql",
]
