"""Heat kernels on Q_p and on the ball, and the ball semigroup T_N(t).

The production path for the ball kernels is the finite shell sum

    G^(beta)_N(t, x) = sum_{n=-N+1}^{min(1-m, l)} e^{-t p^(n beta)} S_n(x) + p^-N e^{-lambda_beta t},

where |x|_p = p^m and S_n(x) is the integral of chi(-x xi) over the shell
|xi|_p = p^n.  Z^(alpha)_N(t, .) = e^{lambda_alpha t} G^(alpha)_N(t, .).
The global kernel Z_alpha and the c(t) series are kept for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import mpmath
import numpy as np

from .grid import GridFunction, convolve
from .operators import build_spectral, lambda_alpha
from .padic import GridParams, abs_exponents, shell_integral_array

GLOBAL_TAIL_TOL = 1e-16
C_SERIES_MAX_T = 1e6


def _check_t(t: float, allow_zero: bool = False):
    if t < 0 or (t == 0 and not allow_zero) or not math.isfinite(t):
        raise ValueError(f"t must be {'non-negative' if allow_zero else 'positive'}, got {t}")


def heat_kernel_global(alpha: float, t: float, j: float, p: int, zero_cell_l: int | None = None) -> float:
    """Z_alpha(t, x) on Q_p for |x|_p = p^j.

    For ``j = -inf`` (x = 0) the pointwise value is returned, unless
    ``zero_cell_l`` is given, in which case the average of Z over the ball
    B_{-zero_cell_l} is returned instead (the value a grid cell carries).

    The series over n <= -j is truncated once the geometric tail
    sum_{n < n_min} (1 - 1/p) p^n = p^n_min falls below ``GLOBAL_TAIL_TOL``.
    """
    _check_t(t)
    pf = float(p)
    n_min = math.floor(math.log(GLOBAL_TAIL_TOL) / math.log(pf)) - 1
    if math.isinf(j):
        if zero_cell_l is not None:
            n_max = zero_cell_l
        else:
            # terms p^n e^{-t p^(n alpha)} are negligible once t p^(n alpha) > 100 + n log p
            n_max = 0
            while t * pf ** (n_max * alpha) < 100.0 + n_max * math.log(pf):
                n_max += 1
        terms = [(1.0 - 1.0 / pf) * pf**n * math.exp(-t * pf ** (n * alpha)) for n in range(n_min, n_max + 1)]
        return math.fsum(terms)
    j = int(j)
    terms = [(1.0 - 1.0 / pf) * pf**n * math.exp(-t * pf ** (n * alpha)) for n in range(min(n_min, -j), -j + 1)]
    terms.append(-(pf ** (-j)) * math.exp(-t * pf ** ((1 - j) * alpha)))
    return math.fsum(terms)


def heat_kernel_global_grid(alpha: float, t: float, params: GridParams) -> GridFunction:
    """Z_alpha(t, .) sampled on the cells of B_N (zero cell carries its average)."""
    j = abs_exponents(params)
    cache = {}
    vals = np.empty(params.dim)
    for i, jj in enumerate(j):
        if jj not in cache:
            cache[jj] = heat_kernel_global(alpha, t, jj, params.p, zero_cell_l=params.l)
        vals[i] = cache[jj]
    return GridFunction(params, vals)


def ball_mass_global(alpha: float, t: float, params: GridParams) -> float:
    """Integral of Z_alpha(t, .) over B_N, = p^N * integral of e^{-t|xi|^alpha} over |xi| <= p^-N."""
    pf = float(params.p)
    n_min = math.floor(math.log(GLOBAL_TAIL_TOL) / math.log(pf)) - params.N - 1
    terms = [(1.0 - 1.0 / pf) * pf**n * math.exp(-t * pf ** (n * alpha)) for n in range(n_min, -params.N + 1)]
    return pf**params.N * math.fsum(terms)


def _shell_sum(beta: float, t, params: GridParams, shift: bool) -> np.ndarray:
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if np.any(t_arr <= 0):
        raise ValueError("t must be positive")
    j = abs_exponents(params)
    lam = lambda_alpha(beta, params)
    # with ``shift`` every mode carries e^{lambda t}, folded into the exponent
    # so that large t cannot overflow
    off = lam if shift else 0.0
    out = np.zeros((t_arr.size, params.dim))
    pf = float(params.p)
    for n in range(-params.N + 1, params.l + 1):
        s = shell_integral_array(n, j, params.p)
        out += np.exp(-t_arr * (pf ** (n * beta) - off))[:, None] * s[None, :]
    out += (pf ** (-params.N) * np.exp(-(lam - off) * t_arr))[:, None]
    return out if np.ndim(t) else out[0]


def ball_heat_kernel_values(beta: float, t, params: GridParams) -> np.ndarray:
    """G^(beta)_N(t, x) for every cell; ``t`` may be an array (rows follow t)."""
    return _shell_sum(beta, t, params, shift=False)


def ball_heat_kernel(beta: float, t: float, params: GridParams) -> GridFunction:
    """G^(beta)_N(t, .), the kernel of exp(-t D^beta_N)."""
    _check_t(t)
    return GridFunction(params, ball_heat_kernel_values(beta, t, params))


def ball_kernel_Z(alpha: float, t: float, params: GridParams) -> GridFunction:
    """Z^(alpha)_N(t, .) = e^{lambda_alpha t} G^(alpha)_N(t, .), a probability density on B_N."""
    _check_t(t)
    return GridFunction(params, _shell_sum(alpha, t, params, shift=True))


def ball_kernel_from_global(beta: float, t: float, params: GridParams) -> GridFunction:
    """G = Z_beta(t, x) - p^-N int_{B_N} Z_beta + p^-N e^{-lambda t}, with the global series."""
    z = heat_kernel_global_grid(beta, t, params)
    mass = ball_mass_global(beta, t, params)
    lam = lambda_alpha(beta, params)
    return z - params.dual_cell_measure * mass + params.dual_cell_measure * math.exp(-lam * t)


def c_series(alpha: float, t: float, params: GridParams) -> float:
    """c(t) = p^-N - p^-N (1 - 1/p) e^{lambda t} sum_n (-1)^n t^n/n! p^(-N alpha n)/(1 - p^(-alpha n - 1)).

    The alternating series is summed in extended precision, with enough
    guard digits to absorb the cancellation (the largest term is about
    e^{t p^(-N alpha)}); summation stops once a term drops below 1e-30
    relative to the running sum.
    """
    _check_t(t)
    if t > C_SERIES_MAX_T:
        raise ValueError(f"c(t) series evaluation rejected for t > {C_SERIES_MAX_T:g}")
    p = mpmath.mpf(params.p)
    x = mpmath.mpf(t) * p ** (-params.N * alpha)
    guard = int(float(x) / math.log(10)) + 30
    with mpmath.workdps(guard):
        p = mpmath.mpf(params.p)
        x = mpmath.mpf(t) * p ** (-params.N * alpha)
        total = mpmath.mpf(0)
        term = mpmath.mpf(1)
        n = 0
        while True:
            contrib = term / (1 - p ** (-alpha * n - 1))
            total += contrib
            if n > x and abs(contrib) < mpmath.mpf(10) ** (-30) * max(abs(total), mpmath.mpf(10) ** (-300)):
                break
            n += 1
            term *= -x / n
        lam = mpmath.mpf(lambda_alpha(alpha, params))
        pn = p ** (-params.N)
        c = pn - pn * (1 - 1 / p) * mpmath.exp(lam * t) * total
        return float(c)


def c_beta_integral(beta: float, t: float, params: GridParams) -> float:
    """c_beta(t) = p^-N - e^{lambda_beta t} p^-N int_{B_N} Z_beta(t, y) dy."""
    lam = lambda_alpha(beta, params)
    return params.dual_cell_measure * (1.0 - math.exp(lam * t) * ball_mass_global(beta, t, params))


def semigroup_matrix(beta: float, t: float, params: GridParams) -> np.ndarray:
    """exp(-t (D^beta_N - lambda_beta I)) through the character-basis eigenvalues."""
    _check_t(t, allow_zero=True)
    op = build_spectral(beta, params)
    return op.function(lambda s: np.exp(-t * (s - op.lambda_alpha))).matrix


def semigroup_apply(beta: float, t: float, f: GridFunction) -> GridFunction:
    """T^(beta)_N(t) f = integral over B_N of Z^(beta)_N(t, x - y) f(y) dy."""
    _check_t(t, allow_zero=True)
    if t == 0:
        return f
    return convolve(ball_kernel_Z(beta, t, f.params), f)


@dataclass(frozen=True)
class SemigroupOperator:
    """T_N(t) as a kernel plus its dense matrix exponential for cross-checks."""

    beta: float
    t: float
    params: GridParams

    @cached_property
    def kernel(self) -> GridFunction:
        return ball_kernel_Z(self.beta, self.t, self.params)

    @cached_property
    def matrix_exp(self) -> np.ndarray:
        return semigroup_matrix(self.beta, self.t, self.params)

    def __call__(self, f: GridFunction) -> GridFunction:
        return convolve(self.kernel, f)
