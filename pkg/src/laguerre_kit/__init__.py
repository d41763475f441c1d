"""Laguerre operators on (0, inf)^n: eigenfunctions, heat kernels, Riesz transforms,
square functions and Muckenhoupt weights, with numerical verification tools."""

from .errors import DomainError, UnsupportedClaimError, UsageError
from .grid import Grid, GridFunction, TensorGrid, TimeQuadrature
from .heat import (
    BoundReport,
    EnvelopeSpec,
    KernelQuery,
    SweepGrid,
    delta_dt_heat_kernel_1d,
    delta_heat_kernel_1d,
    delta_star_dt_heat_kernel_1d,
    delta_star_heat_kernel_1d,
    dt_heat_kernel_1d,
    dt_k_heat_kernel_1d,
    envelope_eval,
    fit_bound_constants,
    heat_kernel_1d,
    heat_kernel_nd,
    heat_kernel_nd_array,
)
from .operators import (
    gaussian_maximal,
    hl_maximal,
    maximal_semigroup,
    op_norm_probe,
    riesz_apply_quadrature,
    semigroup_apply_quadrature,
    square_G,
    square_S,
    tail_operators,
    weighted_lp_norm,
)
from .specfun import (
    MultiIndex,
    NuVector,
    bessel_i_scaled,
    eigenvalue,
    laguerre_function,
    laguerre_function_nd,
    laguerre_function_table,
    laguerre_polynomial,
)
from .spectral import (
    SpectralCoeffs,
    apply_delta,
    apply_delta_star,
    evaluate,
    expand,
    projection,
    riesz_apply_spectral,
    semigroup_apply_spectral,
    synthesize,
)
from .weights import ExponentRange, WeightSpec, power_weight_class, refinement_study, theorem_range

__version__ = "0.1.0"
