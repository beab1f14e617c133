"""Tensor sketching of polynomial kernels with limited randomness.

A degree-p polynomial kernel feature map is sketched with just two base
sketches (one SRHT, one TensorSRHT) reused across a repeated-squaring tree.
On top of that sit approximators for the Gaussian kernel, kernels with
power-law Taylor decay (including coefficient-proportional tail sampling),
and the two-layer ReLU tangent kernel, plus a sketch-preconditioned
gradient-descent solver and composed-sketch kernel ridge regression.
Brute-force oracles in :mod:`polysketch.oracle` back every claim at desk
scale.
"""

from .data import DataMatrix
from .errors import (
    ConvergenceError,
    DomainError,
    InvalidDimensionError,
    InvalidParameterError,
    MatrixParseError,
    OracleGuardError,
    PolysketchError,
    PreconditionerError,
    UndefinedValueError,
)
from .io import load_matrix, load_vector, save_matrix, save_vector
from .kernels import (
    SketchedKernel,
    TaylorPlan,
    gaussian_kernel_exact,
    gaussian_sketch,
    gaussian_truncation_degree,
    ntk_coefficient,
    ntk_kernel_exact,
    ntk_sketch,
    pconv_sketch,
    poly_kernel_exact,
    sampled_pconv_sketch,
)
from .oracle import monte_carlo_norm_ratio, spectral_sandwich, tensor_power_dense
from .solvers import (
    condition_number,
    krr_exact,
    krr_solve,
    precond_gd_solve,
    statistical_dimension,
)
from .tensor_sketch import (
    SketchedMatrix,
    TensorSketcher,
    dense_operator,
    plan_dims,
    sketch_matrix,
    sketch_vector,
    tensor_sketcher,
)
from .transforms import (
    SrhtSketch,
    TensorSrhtSketch,
    fwht_in_place,
    ose_dims,
    srht_apply,
    srht_new,
    tensor_srht_apply_pair,
    tensor_srht_new,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError",
    "DataMatrix",
    "DomainError",
    "InvalidDimensionError",
    "InvalidParameterError",
    "MatrixParseError",
    "OracleGuardError",
    "PolysketchError",
    "PreconditionerError",
    "SketchedKernel",
    "SketchedMatrix",
    "SrhtSketch",
    "TaylorPlan",
    "TensorSketcher",
    "TensorSrhtSketch",
    "UndefinedValueError",
    "condition_number",
    "dense_operator",
    "fwht_in_place",
    "gaussian_kernel_exact",
    "gaussian_sketch",
    "gaussian_truncation_degree",
    "krr_exact",
    "krr_solve",
    "load_matrix",
    "load_vector",
    "monte_carlo_norm_ratio",
    "ntk_coefficient",
    "ntk_kernel_exact",
    "ntk_sketch",
    "ose_dims",
    "pconv_sketch",
    "plan_dims",
    "poly_kernel_exact",
    "precond_gd_solve",
    "sampled_pconv_sketch",
    "save_matrix",
    "save_vector",
    "sketch_matrix",
    "sketch_vector",
    "spectral_sandwich",
    "srht_apply",
    "srht_new",
    "statistical_dimension",
    "tensor_power_dense",
    "tensor_sketcher",
    "tensor_srht_apply_pair",
    "tensor_srht_new",
    "__version__",
]
