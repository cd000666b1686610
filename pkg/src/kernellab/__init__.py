"""Kernel regression with rotationally invariant kernels in high dimensions."""

from .kernels import (
    KernelSpec,
    ScaledKernel,
    alpha_exponential,
    cross_gram,
    eval_kernel,
    exp_inner,
    gaussian,
    gram,
    laplace,
    ntk,
)
from .data import (
    CovarianceModel,
    DistributionSpec,
    GroundTruth,
    concentration_check,
    effective_dimension,
    kappa_solve,
    monomial,
    sample,
    standard_model,
)
from .numerics import SingularMatrixError, eig_symmetric, hadamard_power, solve_spd, solve_symmetric_indefinite
from .estimators import (
    FittedEstimator,
    SplineEstimator,
    bandwidth_limits_check,
    fit_flat_limit,
    fit_ridge,
    predict,
    rkhs_norm,
)
from .barrier import (
    barrier_degree,
    best_poly_error,
    build_surrogate,
    min_eig_bound,
    surrogate_predict,
    taylor_gram,
    taylor_gram_gap,
)

__version__ = "0.1.0"
