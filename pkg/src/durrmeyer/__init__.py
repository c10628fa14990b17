"""Multivariate Durrmeyer sampling series: kernels, moments, evaluation and asymptotics."""

from .asymptotics import (
    ConvergenceReport,
    LimitPrediction,
    PreconditionWarning,
    QuantConstants,
    convergence_report,
    empirical_rate,
    expansion_terms,
    fit_rate,
    kfunctional_upper_bound,
    limit_prediction,
    predicted_limit,
    quantitative_constants,
    taylor_remainder,
    theoretical_bound,
    voronovskaja_coefficient,
)
from .errors import (
    ConfigError,
    DivergenceError,
    DomainError,
    DurrmeyerError,
    IndeterminateRateError,
    NumericError,
    UnsupportedError,
    VerificationFailure,
)
from .functions import TestFunction, make_function
from .kernels import (
    BSPLINE2,
    F_KERNEL,
    BochnerRieszKernel,
    Kernel1D,
    KernelND,
    MultiIndex,
    TensorKernel,
    make_kernel,
    tensor_product,
)
from .moments import (
    MomentTable,
    constancy_check,
    continuous_absolute_moment,
    continuous_algebraic_moment,
    discrete_absolute_moment,
    discrete_algebraic_moment,
    fourier_moment_check,
    moment_table,
)
from .operator import (
    OperatorConfig,
    ScalingSequence,
    inner_profile,
    lattice_truncation,
    make_scaling,
    operator_eval,
    operator_eval_bounded,
    scaling_eval,
)

__version__ = "0.1.0"
