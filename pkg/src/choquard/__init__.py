"""Pseudo-spectral simulator and variational toolkit for the focusing
inhomogeneous Hartree equation

    i u_t + lap u + (I_alpha * |x|^b |u|^p) |x|^b |u|^(p-2) u = 0

on a periodic box, with the ground-state solver, sharp-constant machinery,
conservation and variance diagnostics, long-time localized averages, and
the scattering / blow-up classifier built on top of it.
"""

from .evolve import AdaptConfig, EvolveConfig, Trajectory, dt_max_stability, \
    evolve, step_strang, wrap_time
from .grid import BoxGrid, Field, Cutoff, MorawetzWeight, cutoff_psi, \
    gradient, laplacian, make_grid, morawetz_weight, norm_h1, norm_hs, \
    norm_lr, rescale
from .groundstate import GroundState, GroundStateOptions, RadialProfile, \
    compute_ground_state, gn_constant_formula, me_gm, threshold_family
from .hartree import Functionals, Model, RieszKernel, SingularWeight, \
    gn_inequality_check, hls_check, riesz_convolve, riesz_convolve_direct
from .diagnostics import cauchy_defects, classify, coercivity_check, \
    evacuation_scan, interaction_representation, morawetz_average, \
    record_hook, variance_identity_check, variance_rhs, virial_terms
from .params import BENCHMARK, DerivedExponents, ModelParams, \
    derived_exponents, validate_params

__all__ = [
    "AdaptConfig", "BENCHMARK", "BoxGrid", "Cutoff", "DerivedExponents",
    "EvolveConfig", "Field", "Functionals", "GroundState",
    "GroundStateOptions", "Model", "MorawetzWeight", "ModelParams",
    "RadialProfile", "RieszKernel", "SingularWeight", "Trajectory",
    "cauchy_defects", "classify", "coercivity_check", "compute_ground_state",
    "cutoff_psi", "derived_exponents", "dt_max_stability", "evacuation_scan",
    "evolve", "gn_constant_formula", "gn_inequality_check", "gradient",
    "hls_check", "interaction_representation", "laplacian", "make_grid",
    "me_gm", "morawetz_average", "morawetz_weight", "norm_h1", "norm_hs",
    "norm_lr", "record_hook", "rescale", "riesz_convolve",
    "riesz_convolve_direct", "step_strang", "threshold_family",
    "validate_params", "variance_identity_check", "variance_rhs",
    "virial_terms", "wrap_time",
]

__version__ = "0.1.0"
