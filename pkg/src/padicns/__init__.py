"""Vladimirov operators, ball heat kernels and a p-adic Navier-Stokes solver on finite grids."""

from .grid import (
    GridFunction,
    coarsen,
    convolve,
    fourier,
    haar_integral,
    inverse_fourier,
    lq_norm,
    make_test_function,
    refine,
)
from .kernels import ball_heat_kernel, ball_kernel_Z, heat_kernel_global, semigroup_apply
from .operators import (
    VladimirovOperator,
    build_hypersingular,
    build_spectral,
    fractional_power,
    kernel_I,
    lambda_alpha,
    resolvent_kernel,
)
from .padic import GridParams, PAbsValue, abs_value, character, frac_part, shell_character_integral
from .solver import SolverConfig, SolverTrace, convergence_study, solve_cauchy, step

__all__ = [
    "GridFunction",
    "GridParams",
    "PAbsValue",
    "SolverConfig",
    "SolverTrace",
    "VladimirovOperator",
    "abs_value",
    "ball_heat_kernel",
    "ball_kernel_Z",
    "build_hypersingular",
    "build_spectral",
    "character",
    "coarsen",
    "convergence_study",
    "convolve",
    "fourier",
    "frac_part",
    "fractional_power",
    "haar_integral",
    "heat_kernel_global",
    "inverse_fourier",
    "kernel_I",
    "lambda_alpha",
    "lq_norm",
    "make_test_function",
    "refine",
    "resolvent_kernel",
    "semigroup_apply",
    "shell_character_integral",
    "solve_cauchy",
    "step",
]
