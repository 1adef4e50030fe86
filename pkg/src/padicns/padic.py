"""Arithmetic on the finite group B_N / B_{-l}.

A coset of B_{-l} inside the ball B_N = {|x|_p <= p^N} is encoded by one
integer ``k`` in ``[0, p^(N+l))``.  Its base-p digits ``k_0, k_1, ...`` give
the representative

    x = p^(-N) * (k_0 + k_1 p + ... + k_{N+l-1} p^(N+l-1)),

so group addition is addition of ``k`` modulo ``p^(N+l)`` and the p-adic
absolute value is read off the lowest nonzero digit.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering

import numpy as np

MAX_DIM = 2**20


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    return all(n % d for d in range(3, math.isqrt(n) + 1, 2))


@dataclass(frozen=True)
class GridParams:
    """Discretization of the ball B_N at local-constancy exponent l.

    Parameters
    ----------
    p : int
        Prime.
    N : int
        Radius exponent of the ball.
    l : int
        Cells are cosets of B_{-l}; each has Haar measure ``p**-l``.
    """

    p: int
    N: int
    l: int

    def __post_init__(self):
        if not is_prime(self.p):
            raise ValueError(f"p must be prime, got {self.p}")
        if self.N + self.l < 1:
            raise ValueError(f"need N + l >= 1, got N={self.N}, l={self.l}")
        if self.p ** (self.N + self.l) > MAX_DIM:
            raise ValueError(
                f"grid dimension p^(N+l) = {self.p}^{self.N + self.l} exceeds {MAX_DIM}"
            )

    @property
    def depth(self) -> int:
        return self.N + self.l

    @property
    def dim(self) -> int:
        return self.p**self.depth

    @property
    def cell_measure(self) -> float:
        return float(self.p) ** (-self.l)

    @property
    def dual_cell_measure(self) -> float:
        return float(self.p) ** (-self.N)

    @property
    def measure(self) -> float:
        return float(self.p) ** self.N

    def with_l(self, l: int) -> GridParams:
        return GridParams(self.p, self.N, l)

    def check(self, k: int) -> int:
        if not 0 <= k < self.dim:
            raise ValueError(f"coset index {k} outside [0, {self.dim})")
        return k

    def add(self, x: int, y: int) -> int:
        return (x + y) % self.dim

    def neg(self, x: int) -> int:
        return (-x) % self.dim

    def digits(self, k: int) -> list[int]:
        self.check(k)
        out = []
        for _ in range(self.depth):
            k, d = divmod(k, self.p)
            out.append(d)
        return out

    def representative(self, k: int) -> Fraction:
        """Rational representative ``p^-N * k`` of the coset."""
        self.check(k)
        return Fraction(k, 1) / Fraction(self.p) ** self.N


@total_ordering
@dataclass(frozen=True)
class PAbsValue:
    """Exact p-adic absolute value: ``p**exponent``, or ZERO when ``exponent is None``."""

    p: int
    exponent: int | None

    @property
    def is_zero(self) -> bool:
        return self.exponent is None

    @property
    def value(self) -> Fraction:
        if self.exponent is None:
            return Fraction(0)
        return Fraction(self.p) ** self.exponent

    def __float__(self) -> float:
        return float(self.value)

    def __lt__(self, other: PAbsValue) -> bool:
        if self.exponent is None:
            return other.exponent is not None
        if other.exponent is None:
            return False
        return self.exponent < other.exponent

    def __repr__(self) -> str:
        return "ZERO" if self.exponent is None else f"{self.p}^{self.exponent}"


def _lowest_digit(k: int, p: int) -> int:
    i = 0
    while k % p == 0:
        k //= p
        i += 1
    return i


def abs_value(x: int, params: GridParams) -> PAbsValue:
    """|x|_p of the coset ``x``; all members of a nonzero coset share it."""
    params.check(x)
    if x == 0:
        return PAbsValue(params.p, None)
    return PAbsValue(params.p, params.N - _lowest_digit(x, params.p))


def frac_part(x: int, params: GridParams) -> Fraction:
    """p-adic fractional part {x}_p as an exact rational in [0, 1)."""
    params.check(x)
    if params.N <= 0:
        return Fraction(0)
    scale = params.p**params.N
    return Fraction(x % scale, scale)


def character(x: int, params: GridParams) -> complex:
    """Additive character exp(2 pi i {x}_p)."""
    f = frac_part(x, params)
    if f == 0:
        return 1 + 0j
    return cmath.exp(2j * math.pi * f.numerator / f.denominator)


def shell_integral(n: int, j: float, p: int) -> float:
    """Integral of chi(eta z) over the shell |eta|_p = p^n, given |z|_p = p^j.

    ``j = -inf`` stands for z = 0 (every shell takes the first branch).
    """
    if n <= -j:
        return (1.0 - 1.0 / p) * float(p) ** n
    if n == -j + 1:
        return -(float(p) ** (n - 1))
    return 0.0


def shell_character_integral(n: int, z: int, params: GridParams) -> float:
    """Shell integral of chi(eta z) over |eta|_p = p^n for the coset ``z``.

    Only shells resolved by the grid's dual, ``-N+1 <= n <= l``, are accepted.
    """
    if not -params.N + 1 <= n <= params.l:
        raise ValueError(f"shell exponent {n} outside [{-params.N + 1}, {params.l}]")
    a = abs_value(z, params)
    j = -math.inf if a.is_zero else a.exponent
    return shell_integral(n, j, params.p)


def abs_exponents(params: GridParams) -> np.ndarray:
    """Exponent j with |x|_p = p^j for every coset; ``-inf`` marks the zero coset."""
    k = np.arange(params.dim)
    low = np.zeros(params.dim, dtype=np.int64)
    rest = k.copy()
    rest[0] = 1
    while True:
        mask = rest % params.p == 0
        if not mask.any():
            break
        low[mask] += 1
        rest[mask] //= params.p
    out = (params.N - low).astype(float)
    out[0] = -np.inf
    return out


def dual_abs_exponents(params: GridParams) -> np.ndarray:
    """Exponent s with |eta|_p = p^s for every dual index ``m`` (eta = p^-l m).

    The trivial character ``m = 0`` carries ``-inf``.
    """
    x = abs_exponents(params)
    # eta = p^-l m has the same digit layout as x = p^-N k, shifted by l - N
    return x + (params.l - params.N)


def shell_integral_array(n: int, j: np.ndarray, p: int) -> np.ndarray:
    """Vectorized :func:`shell_integral` over an array of exponents."""
    out = np.zeros(j.shape)
    out[n <= -j] = (1.0 - 1.0 / p) * float(p) ** n
    out[n == -j + 1] = -(float(p) ** (n - 1))
    return out
