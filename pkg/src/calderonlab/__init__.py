"""Decreasing rearrangements, generalized Calderon operators and weight constants."""

from .admissible import AdmissibleFunction, phi_eval, slope_bounds, transform_tilde
from .calderon import CalderonParams, ak_norm, kernel_primitive, lorentz_norm, p_op, q_op, s_op
from .harness import corpus_run, preset_params, tau_envelope, verify_instance
from .operators import SparseFamily, hl_maximal, sparse_apply, sparse_generate
from .stepfn import GridFunction, StepFunction, distribution_function, double_star, rearrange
from .weights import PowerWeight, StepWeight, W_eval, bR_constant, bstar_constant, wbar

__version__ = "0.1.0"

__all__ = [
    "AdmissibleFunction",
    "CalderonParams",
    "GridFunction",
    "PowerWeight",
    "SparseFamily",
    "StepFunction",
    "StepWeight",
    "W_eval",
    "ak_norm",
    "bR_constant",
    "bstar_constant",
    "corpus_run",
    "distribution_function",
    "double_star",
    "hl_maximal",
    "kernel_primitive",
    "lorentz_norm",
    "p_op",
    "phi_eval",
    "preset_params",
    "q_op",
    "rearrange",
    "s_op",
    "slope_bounds",
    "sparse_apply",
    "sparse_generate",
    "tau_envelope",
    "transform_tilde",
    "verify_instance",
    "wbar",
]
