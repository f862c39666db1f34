"""Simulation laboratory for the location of the maximum of random paths.

Samples Gaussian and spectrally positive Levy paths, locates suprema and
argmax brackets, and checks derivative criteria and argmax covariance
identities by paired Monte Carlo.
"""
from __future__ import annotations

from .errors import (ArgmaxLabError, ConfigurationError, DegenerateAnchorError,
                     DomainError, KernelInvalidError)
from .extremum import (ArgmaxSummary, argmax_nd, slice_max_projection, sup_and_argmax,
                       uniqueness_indicator)
from .kernels import (DriftSpec, KernelSpec, check_monotone_in_first_arg, kernel_eval,
                      kernel_matrix, validate_anchor_conditions)
from .levy import (JumpLaw, LevyTriplet, exit_time_from_zero, first_argmax_time,
                   reverse_path, sample_levy_path)
from .paths import Grid, JumpRecord, PathSample
from .rng import SeedSpec
from .sampler import (add_drift, sample_additive_bm_field, sample_gaussian_path,
                      sample_sheet_with_frontier)
from .stats import IdentityReport, McAccumulator
from .montecarlo import GaussianProcess, LevyProcess, Tilt, run_replicates
from .perturb import (PerturbationSpec, Rho, check_bracketing, covariance_identity_1d,
                      covariance_identity_nd, derivative_criterion_check, difference_quotient,
                      estimate_s_curve, gaussian_gradient_identity, perturb_path)
from .bridge import (check_reconstruction_identity, gamma_functions, reconstruct_from_bridge,
                     residual_kernel, sample_conditioned_path)

__version__ = "0.1.0"

__all__ = [
    "ArgmaxLabError", "ConfigurationError", "DegenerateAnchorError", "DomainError",
    "KernelInvalidError", "ArgmaxSummary", "argmax_nd", "slice_max_projection",
    "sup_and_argmax", "uniqueness_indicator", "DriftSpec", "KernelSpec",
    "check_monotone_in_first_arg", "kernel_eval", "kernel_matrix",
    "validate_anchor_conditions", "JumpLaw", "LevyTriplet", "exit_time_from_zero",
    "first_argmax_time", "reverse_path", "sample_levy_path", "Grid", "JumpRecord",
    "PathSample", "SeedSpec", "add_drift", "sample_additive_bm_field",
    "sample_gaussian_path", "sample_sheet_with_frontier", "IdentityReport",
    "McAccumulator", "GaussianProcess", "LevyProcess", "Tilt", "run_replicates",
    "PerturbationSpec", "Rho", "check_bracketing", "covariance_identity_1d",
    "covariance_identity_nd", "derivative_criterion_check", "difference_quotient",
    "estimate_s_curve", "gaussian_gradient_identity", "perturb_path",
    "check_reconstruction_identity", "gamma_functions", "reconstruct_from_bridge",
    "residual_kernel", "sample_conditioned_path",
]
