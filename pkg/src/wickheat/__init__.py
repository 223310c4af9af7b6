"""Spectral Wiener-chaos solver for the Neumann heat equation on (0, pi)
driven by Wick-multiplicative spatial white noise."""

__version__ = "0.1.0"

from .chaos_index import (
    MultiIndex,
    characteristic_set,
    chaos_basis_eval,
    enumerate_multiindices,
    from_characteristic_set,
    hermite,
    wick_product_coeffs,
)
from .exppoly import ExpPoly, duhamel
from .propagator import (
    BudgetExceeded,
    ChaosField,
    FundamentalField,
    positivity_certificate,
    solve_fundamental,
    solve_propagator,
)
from .regularity import (
    IncrementCurve,
    additive_increment_curves,
    kolmogorov_exponent,
    space_increment_curve,
    time_increment_curve,
)
from .simplex_integrals import (
    SimplexIntegralSpec,
    factorial_decay_bound,
    simplex_integral,
    truncation_tail_estimate,
)
from .spectral_basis import (
    SpectralFunction,
    heat_kernel,
    kernel_bounds_check,
    lambda_pow,
    r_gamma_kernel,
    triple_products,
)
from .stochastic_field import (
    additive_solution_sample,
    draw,
    draw_batch,
    exact_second_moment,
    lq_norm,
    sample_field,
)
from . import diagnostics
