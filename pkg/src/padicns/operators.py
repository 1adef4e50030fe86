"""The restricted Vladimirov operator D^alpha_N on D_N^l.

Every operator here is translation invariant on the ball group, so it is
diagonal in the character basis.  :class:`SpectralOperator` stores the
multiplier (one eigenvalue per dual index) and applies itself through the
grid Fourier transform; dense matrices are built on demand.

D^alpha_N is assembled two independent ways:

* :func:`build_hypersingular` sums the hypersingular integral shell by shell
  and reads the eigenvalues off the assembled kernel;
* :func:`build_spectral` uses the closed-form symbol, ``lambda_alpha`` on
  constants and ``|eta|_p^alpha`` on every other character.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from .grid import GridFunction, haar_integral
from .padic import (
    GridParams,
    abs_exponents,
    abs_value,
    dual_abs_exponents,
    shell_integral,
    shell_integral_array,
)

DENSE_LIMIT = 4096


def lambda_alpha(alpha: float, params: GridParams) -> float:
    """Smallest eigenvalue of D^alpha_N, (p-1)/(p^(alpha+1)-1) * p^(alpha(1-N))."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    p = float(params.p)
    return (p - 1.0) / (p ** (alpha + 1.0) - 1.0) * p ** (alpha * (1 - params.N))


def hypersingular_constant(alpha: float, p: int) -> float:
    """Normalizing constant (1 - p^alpha) / (1 - p^(-alpha-1)); negative for alpha > 0."""
    return (1.0 - float(p) ** alpha) / (1.0 - float(p) ** (-alpha - 1.0))


def spectral_map(alpha: float, params: GridParams) -> np.ndarray:
    """Eigenvalue of D^alpha_N on each character chi(eta x), indexed by dual m."""
    s = dual_abs_exponents(params)
    out = float(params.p) ** (alpha * s[1:])
    return np.concatenate([[lambda_alpha(alpha, params)], out])


def _circulant(kernel_weights: np.ndarray) -> np.ndarray:
    """Matrix A[x, y] = w(x - y) on Z / dim."""
    n = kernel_weights.size
    if n > DENSE_LIMIT:
        raise ValueError(f"dense matrices limited to dim <= {DENSE_LIMIT}, got {n}")
    idx = np.arange(n)
    return kernel_weights[(idx[:, None] - idx[None, :]) % n]


class SpectralOperator:
    """Translation-invariant operator given by its multiplier on the dual grid.

    ``apply(f) = F^-1[multiplier * F f]``.
    """

    def __init__(self, params: GridParams, multiplier: np.ndarray):
        multiplier = np.asarray(multiplier)
        if multiplier.shape != (params.dim,):
            raise ValueError(f"multiplier must have length {params.dim}")
        self.params = params
        self.multiplier = multiplier

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.multiplier

    def apply_values(self, v: np.ndarray) -> np.ndarray:
        # the constant mode is split off first: transforming a large mean would
        # leak rounding into high modes, where the multiplier amplifies it
        c = np.mean(v)
        # F and F^-1 weights cancel (p^N * p^-N), leaving a plain DFT pair
        out = np.fft.fft(self.multiplier * np.fft.ifft(v - c)) + self.multiplier[0] * c
        return out.real if np.isrealobj(v) and np.isrealobj(self.multiplier) and self._even else out

    @cached_property
    def _even(self) -> bool:
        m = self.multiplier
        return bool(np.array_equal(m, m[(-np.arange(m.size)) % m.size]))

    def apply(self, f: GridFunction) -> GridFunction:
        if f.params != self.params:
            raise ValueError(f"grid mismatch: {f.params} vs {self.params}")
        return GridFunction(self.params, self.apply_values(f.values))

    __call__ = apply

    def kernel(self) -> GridFunction:
        """Convolution kernel k with ``apply(f) = k * f``."""
        return GridFunction(self.params, self.params.dual_cell_measure * np.fft.fft(self.multiplier))

    @cached_property
    def matrix(self) -> np.ndarray:
        k = self.kernel().values * self.params.cell_measure
        if np.allclose(self.multiplier.imag, 0) and np.allclose(
            self.multiplier, self.multiplier[(-np.arange(self.params.dim)) % self.params.dim]
        ):
            k = k.real
        return _circulant(k)

    def compose(self, other: SpectralOperator) -> SpectralOperator:
        return SpectralOperator(self.params, self.multiplier * other.multiplier)

    def function(self, func) -> SpectralOperator:
        """func(A), defined eigenvalue by eigenvalue in the character basis."""
        return SpectralOperator(self.params, func(self.multiplier))

    def inverse(self) -> SpectralOperator:
        if np.any(self.multiplier == 0):
            raise ZeroDivisionError("operator is singular")
        return SpectralOperator(self.params, 1.0 / self.multiplier)

    def power(self, gamma: float) -> SpectralOperator:
        return SpectralOperator(self.params, self.multiplier**gamma)

    def exp(self, t: float) -> SpectralOperator:
        """exp(-t A)."""
        return SpectralOperator(self.params, np.exp(-t * self.multiplier))


class VladimirovOperator(SpectralOperator):
    """D^alpha_N on D_N^l with its character-basis eigenvalues.

    ``source`` records which construction produced it.  The hypersingular
    build keeps its assembled matrix; the spectral build forms the matrix
    from the symbol when first asked.
    """

    def __init__(self, params, alpha, multiplier, source, matrix=None):
        super().__init__(params, multiplier)
        self.alpha = float(alpha)
        self.lambda_alpha = lambda_alpha(alpha, params)
        self.source = source
        if matrix is not None:
            self.__dict__["matrix"] = matrix

    def __repr__(self):
        return f"VladimirovOperator(alpha={self.alpha}, {self.params}, source={self.source!r})"


def hypersingular_kernel_weights(alpha: float, params: GridParams) -> np.ndarray:
    """Row weights w(y) with (D phi)(x) = sum_y w(y) phi(x - y).

    Off the zero coset the hypersingular integrand is constant on each cell,
    so cell quadrature is exact: w(y) = c_alpha p^-l |y|^(-alpha-1).  The zero
    coset carries lambda_alpha minus the row sum of the rest.
    """
    j = abs_exponents(params)
    w = np.zeros(params.dim)
    nz = np.isfinite(j)
    w[nz] = (
        hypersingular_constant(alpha, params.p)
        * params.cell_measure
        * float(params.p) ** ((-alpha - 1.0) * j[nz])
    )
    w[0] = lambda_alpha(alpha, params) - math.fsum(w[nz])
    return w


def build_hypersingular(alpha: float, params: GridParams) -> VladimirovOperator:
    lambda_alpha(alpha, params)
    w = hypersingular_kernel_weights(alpha, params)
    matrix = _circulant(w) if params.dim <= DENSE_LIMIT else None
    # eigenvalue on chi(eta x) is lambda + sum_{y != 0} w(y) [chi(-eta y) - 1]; summing
    # in this form avoids the cancellation stored in the zero-coset weight w(0)
    off = w.copy()
    off[0] = 0.0
    eig = lambda_alpha(alpha, params) + (np.fft.fft(off).real - math.fsum(off))
    eig[0] = lambda_alpha(alpha, params)  # every bracket vanishes at eta = 0
    return VladimirovOperator(params, alpha, eig, "hypersingular", matrix)


def build_spectral(alpha: float, params: GridParams) -> VladimirovOperator:
    return VladimirovOperator(params, alpha, spectral_map(alpha, params), "spectral")


def internal_integral(
    alpha: float, m: int, params: GridParams, normalized: bool = True, dps: int | None = None
):
    """Grid quadrature of the integral over B_N of |y|^(-alpha-1)[chi(-eta y) - 1] dy.

    ``m`` is the dual index of eta.  With ``normalized`` the result is
    multiplied by the hypersingular constant, which is the form that equals
    ``|eta|_p^alpha - lambda_alpha``.

    With ``dps`` the same cell sum is evaluated in mpmath at that many
    decimal digits and returned as an ``mpf``.  The integrand is even in y,
    so the imaginary part vanishes and only the cosine sum is formed.
    Double precision cannot resolve 1e-12 once ``|eta|^alpha`` exceeds a few
    thousand, which is what this mode is for.
    """
    if dps is not None:
        return _internal_integral_mp(alpha, m, params, normalized, dps)
    j = abs_exponents(params)
    k = np.arange(params.dim)
    nz = np.isfinite(j)
    chi = np.exp(-2j * np.pi * (k[nz] * m % params.dim) / params.dim)
    terms = float(params.p) ** ((-alpha - 1.0) * j[nz]) * (chi - 1.0)
    val = params.cell_measure * (math.fsum(terms.real) + 1j * math.fsum(terms.imag))
    if normalized:
        val *= hypersingular_constant(alpha, params.p)
    return val


@lru_cache(maxsize=64)
def _cos_table_mp(dim: int, dps: int):
    import mpmath

    with mpmath.workdps(dps):
        return tuple(mpmath.cospi(mpmath.mpf(2 * r) / dim) - 1 for r in range(dim))


def _internal_integral_mp(alpha, m, params, normalized, dps):
    import mpmath

    table = _cos_table_mp(params.dim, dps)
    with mpmath.workdps(dps):
        p = mpmath.mpf(params.p)
        a = mpmath.mpf(alpha)
        j = abs_exponents(params)
        # group cells by shell so each weight is formed once
        shells = {}
        for k in range(1, params.dim):
            shells.setdefault(int(j[k]), []).append(table[(k * m) % params.dim])
        total = mpmath.fsum(p ** ((-a - 1) * jj) * mpmath.fsum(v) for jj, v in shells.items())
        total *= p ** (-params.l)
        if normalized:
            total *= (1 - p**a) / (1 - p ** (-a - 1))
        return +total


def lambda_alpha_mp(alpha: float, params: GridParams, dps: int = 40):
    """lambda_alpha in mpmath, for comparisons below double-precision resolution."""
    import mpmath

    with mpmath.workdps(dps):
        p, a = mpmath.mpf(params.p), mpmath.mpf(alpha)
        return +((p - 1) / (p ** (a + 1) - 1) * p ** (a * (1 - params.N)))


def projection_constants(params: GridParams) -> SpectralOperator:
    """P_0 f = p^-N * integral of f (orthogonal projection onto constants)."""
    mult = np.zeros(params.dim)
    mult[0] = 1.0
    return SpectralOperator(params, mult)


def fractional_power(op: VladimirovOperator, gamma: float) -> SpectralOperator:
    """(D^beta_N)^gamma for gamma in (0, 1], defined spectrally."""
    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    if gamma == 1:
        return op
    return op.power(gamma)


def bochner_inverse_power_kernel(
    beta: float, gamma: float, params: GridParams, tol: float = 1e-10
) -> GridFunction:
    """Kernel of (D^beta_N)^(-gamma) from the Bochner integral over the heat semigroup.

        (D^beta_N)^(-gamma) = 1/Gamma(gamma) * int_0^inf t^(gamma-1) G^(beta)_N(t, .) * dt

    with G^(beta)_N the ball heat kernel of exp(-t D^beta_N).  The substitution
    t = e^s turns the integrand into a function with exponential decay at
    -inf and double-exponential decay at +inf, where the trapezoidal rule
    converges geometrically; the step is halved until successive kernels
    agree to ``tol``.
    """
    from .kernels import ball_heat_kernel_values

    if not 0 < gamma <= 1:
        raise ValueError(f"gamma must lie in (0, 1], got {gamma}")
    lam = lambda_alpha(beta, params)
    # left tail: int_{-inf}^{s_lo} e^{gamma s} ds * sup|G| <= tol
    gmax = float(params.p) ** params.l + float(params.p) ** (-params.N)
    s_lo = math.log(tol * gamma / gmax) / gamma
    # right tail: every mode decays at least like exp(-lam e^s)
    s_hi = math.log(max(60.0 / lam, 1.0)) + 2.0
    h = 0.5
    prev = None
    while True:
        s = np.arange(s_lo, s_hi + h, h)
        t = np.exp(s)
        weights = h * np.exp(gamma * s)
        g = ball_heat_kernel_values(beta, t, params)
        cur = (weights[:, None] * g).sum(axis=0) / math.gamma(gamma)
        if prev is not None and np.max(np.abs(cur - prev)) < tol * max(1.0, np.max(np.abs(cur))):
            return GridFunction(params, cur)
        if h < 1e-3:
            raise RuntimeError("Bochner quadrature did not converge")
        prev = cur
        h /= 2


def bochner_inverse_power(op: VladimirovOperator, gamma: float, f: GridFunction) -> GridFunction:
    from .grid import convolve

    return convolve(bochner_inverse_power_kernel(op.alpha, gamma, op.params), f)


def resolvent_kernel(beta: float, params: GridParams) -> GridFunction:
    """K_{lambda_beta}(x): integral of chi(eta x)/|eta|^beta over |eta|_p >= p^(-N+1).

    Evaluated as a finite shell sum.  At the zero coset the shells run up to
    the grid's resolution ``n = l`` (the cell average of the kernel).
    """
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    j = abs_exponents(params)
    out = np.zeros(params.dim)
    for n in range(-params.N + 1, params.l + 1):
        out += float(params.p) ** (-n * beta) * shell_integral_array(n, j, params.p)
    return GridFunction(params, out)


def resolvent_apply(beta: float, f: GridFunction) -> GridFunction:
    """(D^beta_N)^-1 f = K * f + lambda_beta^-1 p^-N int f."""
    from .grid import convolve

    params = f.params
    lam = lambda_alpha(beta, params)
    mean_term = haar_integral(f) * params.dual_cell_measure / lam
    return convolve(resolvent_kernel(beta, params), f) + mean_term


def _check_prop4_range(alpha: float, beta: float):
    if not (0 < alpha < beta <= alpha + 1 and beta > 1):
        raise ValueError(f"need 0 < alpha < beta <= alpha + 1 and beta > 1, got alpha={alpha}, beta={beta}")


def kernel_I(alpha: float, beta: float, params: GridParams, z: int) -> float:
    """Closed form of I(z) for |z|_p = p^j.

    j = N:  -p^(alpha-beta) |z|^-(alpha-beta+1)
    j < N:  (1-1/p) sum_{nu=1}^{N-j} p^((nu-N)(alpha-beta+1)) - p^(-1) p^((1-j)(alpha-beta+1))

    The zero coset has no closed form; it takes the grid cell average
    (shell sum truncated at n = l), as in :func:`kernel_I_shell_sum`.
    """
    _check_prop4_range(alpha, beta)
    params.check(z)
    if z == 0:
        return kernel_I_shell_sum(alpha, beta, params, z)
    p = float(params.p)
    e = alpha - beta + 1.0
    j = abs_value(z, params).exponent
    if j == params.N:
        return -(p ** (alpha - beta)) * p ** (-j * e)
    s = math.fsum(p ** ((nu - params.N) * e) for nu in range(1, params.N - j + 1))
    return (1.0 - 1.0 / p) * s - p ** ((1 - j) * e) / p


def kernel_I_shell_sum(alpha: float, beta: float, params: GridParams, z: int) -> float:
    """I(z) = sum_n p^(n(alpha-beta)) * (shell integral of chi(eta z) over |eta| = p^n)."""
    a = abs_value(z, params)
    j = -math.inf if a.is_zero else a.exponent
    return math.fsum(
        float(params.p) ** (n * (alpha - beta)) * shell_integral(n, j, params.p)
        for n in range(-params.N + 1, params.l + 1)
    )


def kernel_I_grid(alpha: float, beta: float, params: GridParams) -> GridFunction:
    _check_prop4_range(alpha, beta)
    j = abs_exponents(params)
    out = np.zeros(params.dim)
    for n in range(-params.N + 1, params.l + 1):
        out += float(params.p) ** (n * (alpha - beta)) * shell_integral_array(n, j, params.p)
    return GridFunction(params, out)


@dataclass(frozen=True)
class OperatorSummary:
    params: GridParams
    alpha: float
    lambda_alpha: float
    matrix: np.ndarray
    eigenvalues: np.ndarray

    def to_json(self) -> dict:
        return {
            "params": {"p": self.params.p, "N": self.params.N, "l": self.params.l},
            "alpha": self.alpha,
            "lambda": self.lambda_alpha,
            "matrix": self.matrix.ravel().tolist(),
            "eigenvalues": self.eigenvalues.tolist(),
        }


def summarize(op: VladimirovOperator) -> OperatorSummary:
    return OperatorSummary(op.params, op.alpha, op.lambda_alpha, np.asarray(op.matrix), op.eigenvalues)
