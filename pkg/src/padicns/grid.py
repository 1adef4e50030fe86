"""Locally constant functions on B_N at resolution l (the space D_N^l).

A :class:`GridFunction` stores one complex value per coset of B_{-l}.  The
Haar measure gives every cell weight ``p**-l``.  The dual group
B_l / B_{-N} is indexed the same way (``eta = p^-l m``), and the pairing is
chi(eta x) = exp(2 pi i k m / p^(N+l)), so the p-adic Fourier transform on
the grid is a discrete Fourier transform on Z / p^(N+l).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .padic import GridParams

KINDS = ("indicator", "character", "random", "mean-zero-random")


@dataclass(frozen=True, eq=False)
class GridFunction:
    params: GridParams
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.params.dim,):
            raise ValueError(
                f"expected {self.params.dim} values for {self.params}, got shape {values.shape}"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, params: GridParams, c: complex = 1.0) -> GridFunction:
        return cls(params, np.full(params.dim, c, dtype=complex))

    @property
    def real(self) -> np.ndarray:
        return self.values.real

    def _check(self, other: GridFunction):
        if other.params != self.params:
            raise ValueError(f"grid mismatch: {self.params} vs {other.params}")

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.params, self.values + other.values)
        return GridFunction(self.params, self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.params, self.values - other.values)
        return GridFunction(self.params, self.values - other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return GridFunction(self.params, self.values * other.values)
        return GridFunction(self.params, self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.params, -self.values)

    def translate(self, a: int) -> GridFunction:
        """x -> f(x - a)."""
        return GridFunction(self.params, np.roll(self.values, a))

    def reflect(self) -> GridFunction:
        """x -> f(-x)."""
        return GridFunction(self.params, np.roll(self.values[::-1], 1))

    def to_json(self) -> dict:
        p = self.params
        return {
            "p": p.p,
            "N": p.N,
            "l": p.l,
            "values": [[float(v.real), float(v.imag)] for v in self.values],
        }

    @classmethod
    def from_json(cls, data: dict) -> GridFunction:
        params = GridParams(int(data["p"]), int(data["N"]), int(data["l"]))
        vals = np.asarray(data["values"], dtype=float)
        if vals.ndim == 1:
            return cls(params, vals)
        return cls(params, vals[:, 0] + 1j * vals[:, 1])

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, text: str) -> GridFunction:
        return cls.from_json(json.loads(text))


def haar_integral(f: GridFunction) -> complex:
    return complex(f.params.cell_measure * np.sum(f.values))


def lq_norm(f: GridFunction | np.ndarray, q: float, params: GridParams | None = None) -> float:
    """L^q(B_N) norm; ``q = inf`` gives the sup norm.

    Accepts a raw value array together with ``params`` for use in tight loops.
    """
    if isinstance(f, GridFunction):
        values, params = f.values, f.params
    else:
        values = np.asarray(f)
    if q == np.inf:
        return float(np.max(np.abs(values)))
    if q < 1:
        raise ValueError(f"q must be >= 1, got {q}")
    a = np.abs(values)
    top = a.max()
    if top == 0:
        return 0.0
    # scale by the max to keep |v|^q in range for large q
    return float(top * (params.cell_measure * np.sum((a / top) ** q)) ** (1.0 / q))


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """(f * g)(x) = p^-l sum_y f(x - y) g(y) on the ball group."""
    f._check(g)
    h = np.fft.ifft(np.fft.fft(f.values) * np.fft.fft(g.values))
    return GridFunction(f.params, f.params.cell_measure * h)


def character_matrix(params: GridParams) -> np.ndarray:
    """Dense table chi(eta_m x_k), rows indexed by dual m, columns by cell k."""
    k = np.arange(params.dim)
    return np.exp(2j * np.pi * (np.outer(k, k) % params.dim) / params.dim)


def fourier(f: GridFunction) -> np.ndarray:
    """(F f)(eta) = p^-l sum_x chi(eta x) f(x), indexed by dual index m."""
    # sum_k exp(+2 pi i k m / D) f_k = D * ifft(f)
    return float(f.params.p) ** f.params.N * np.fft.ifft(f.values)


def inverse_fourier(fhat: np.ndarray, params: GridParams) -> GridFunction:
    """f(x) = p^-N sum_eta chi(-eta x) fhat(eta)."""
    return GridFunction(params, params.dual_cell_measure * np.fft.fft(fhat))


def dual_l2_norm(fhat: np.ndarray, params: GridParams) -> float:
    return float(np.sqrt(params.dual_cell_measure * np.sum(np.abs(fhat) ** 2)))


def refine(f: GridFunction, l_new: int) -> GridFunction:
    """Embed D_N^l into D_N^{l_new}: each cell value is copied to its children."""
    if l_new < f.params.l:
        raise ValueError(f"refine needs l_new >= {f.params.l}, got {l_new}")
    params = f.params.with_l(l_new)
    # a fine cell k' lies in the coarse cell k' mod p^(N+l)
    return GridFunction(params, np.tile(f.values, f.params.p ** (l_new - f.params.l)))


def coarsen(f: GridFunction, l_new: int) -> GridFunction:
    """Average children into parent cells (L^2-orthogonal projection)."""
    if l_new > f.params.l:
        raise ValueError(f"coarsen needs l_new <= {f.params.l}, got {l_new}")
    params = f.params.with_l(l_new)
    return GridFunction(params, f.values.reshape(-1, params.dim).mean(axis=0))


def make_test_function(
    params: GridParams,
    kind: str,
    seed: int = 0,
    index: int = 0,
    scale: float = 1.0,
    complex_values: bool = False,
) -> GridFunction:
    """Deterministic sample function.

    Parameters
    ----------
    kind : {"indicator", "character", "random", "mean-zero-random"}
        ``indicator`` and ``character`` use ``index`` as cell / dual index.
    seed : int
        Seed for the random kinds; the same seed always gives the same values.
    complex_values : bool
        Draw complex Gaussian values for the random kinds.
    """
    if kind == "indicator":
        v = np.zeros(params.dim, dtype=complex)
        v[params.check(index)] = 1.0
    elif kind == "character":
        k = np.arange(params.dim)
        v = np.exp(2j * np.pi * (k * params.check(index) % params.dim) / params.dim)
    elif kind in ("random", "mean-zero-random"):
        rng = np.random.default_rng(seed)
        v = rng.standard_normal(params.dim).astype(complex)
        if complex_values:
            v = v + 1j * rng.standard_normal(params.dim)
        if kind == "mean-zero-random":
            v = v - v.mean()
    else:
        raise ValueError(f"unknown test function kind {kind!r}; expected one of {KINDS}")
    return GridFunction(params, scale * v)
