"""Blind deconvolution under subspace models by regularized Wirtinger gradient descent."""
from .descent import Backtracking, SolveOptions, SolveTrace, solve, step, success
from .ensembles import (
    SubspaceOperators,
    make_gaussian_a,
    make_operators,
    make_partial_dft_b,
    make_partial_hadamard_a,
)
from .lifted import LiftedOperator, Observation, Truth, add_noise
from .numeric import RngStream, fft_unitary, fwht_unitary, sample_complex_gaussian
from .objective import (
    Iterate,
    RegParams,
    default_mu2,
    default_reg_params,
    delta_metric,
    empirical_rip_ratio,
    grad_F,
    grad_G,
    incoherence_mu2,
    loss_F,
    membership,
    penalty_G,
)
from .spectral import initialize, power_method, project_incoherence

__version__ = "0.1.0"

__all__ = [
    "Backtracking", "SolveOptions", "SolveTrace", "solve", "step", "success",
    "SubspaceOperators", "make_gaussian_a", "make_operators", "make_partial_dft_b",
    "make_partial_hadamard_a", "LiftedOperator", "Observation", "Truth", "add_noise",
    "RngStream", "fft_unitary", "fwht_unitary", "sample_complex_gaussian", "Iterate",
    "RegParams", "default_mu2", "default_reg_params", "delta_metric", "empirical_rip_ratio",
    "grad_F", "grad_G", "incoherence_mu2", "loss_F", "membership", "penalty_G",
    "initialize", "power_method", "project_incoherence",
]
