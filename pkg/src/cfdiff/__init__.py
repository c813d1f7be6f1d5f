"""Fast finite-difference / Legendre collocation solver for multi-term
time-fractional diffusion equations with exponential-kernel (Caputo-Fabrizio)
derivatives."""

from .cf_core import (
    FractionalOrder,
    SampledSignal,
    TimeGrid,
    cf_exact_cos,
    cf_exact_exp,
    cf_exact_power,
    cf_quadrature_oracle,
    fast_init,
    fast_step,
    fast_sweep,
    l1_direct,
    l1_direct_sweep,
)
from .pde_solver import ProblemSpec, SolveResult, solve, solve_history_form
from .spectral import GridFunction, error_norms, interpolate, lgl_basis, shift_basis
from .timestep import MultiTermOperator, step_coefficients

__version__ = "0.1.0"

__all__ = [
    "FractionalOrder",
    "SampledSignal",
    "TimeGrid",
    "MultiTermOperator",
    "ProblemSpec",
    "SolveResult",
    "GridFunction",
    "cf_exact_power",
    "cf_exact_cos",
    "cf_exact_exp",
    "cf_quadrature_oracle",
    "fast_init",
    "fast_step",
    "fast_sweep",
    "l1_direct",
    "l1_direct_sweep",
    "lgl_basis",
    "shift_basis",
    "interpolate",
    "error_norms",
    "step_coefficients",
    "solve",
    "solve_history_form",
]
