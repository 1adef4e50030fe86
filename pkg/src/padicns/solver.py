"""Time stepping for u_t = u (D^1_N u) - theta D^2_N u on the ball.

The diffusion -theta D^2_N is stiff (its spectrum reaches theta p^(2l)), so
it is always treated exactly or implicitly in the character basis; the
quadratic term u D^1_N u is explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .grid import GridFunction, haar_integral, lq_norm, refine
from .operators import build_spectral, lambda_alpha
from .padic import GridParams

SCHEMES = ("ETD1", "IMEX-EULER", "IMEX-RK2")


@dataclass(frozen=True)
class SolverConfig:
    params: GridParams
    theta: float = 1.0
    dt: float = 1e-3
    T: float = 1.0
    scheme: str = "IMEX-EULER"
    blowup_threshold: float = 1e8
    record_every: int = 1
    nonlinear_sign: float = 1.0
    nonlinear: bool = True

    def __post_init__(self):
        if self.theta <= 0:
            raise ValueError(f"theta must be positive, got {self.theta}")
        if not 0 < self.dt <= self.T:
            raise ValueError(f"need 0 < dt <= T, got dt={self.dt}, T={self.T}")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")
        if self.nonlinear_sign not in (1.0, -1.0):
            raise ValueError("nonlinear_sign must be +1 or -1")


@dataclass
class SolverTrace:
    times: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    l2: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    mass: list = field(default_factory=list)
    status: str = "completed"
    blowup_bracket: tuple | None = None
    last_valid_time: float | None = None
    final: GridFunction | None = None

    def record(self, t: float, u: np.ndarray, params: GridParams):
        self.times.append(t)
        self.l1.append(lq_norm(u, 1, params))
        self.l2.append(lq_norm(u, 2, params))
        self.linf.append(lq_norm(u, np.inf, params))
        self.mass.append(float(np.real(params.cell_measure * np.sum(u))))

    @property
    def blowup_time(self) -> float | None:
        return None if self.blowup_bracket is None else 0.5 * sum(self.blowup_bracket)

    def to_csv(self) -> str:
        lines = ["time,l1,l2,linf,mass"]
        for row in zip(self.times, self.l1, self.l2, self.linf, self.mass):
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"


class _Stepper:
    """Precomputed multipliers for one (grid, theta, scheme) combination."""

    def __init__(self, params: GridParams, theta: float, scheme: str, sign: float, nonlinear: bool):
        self.params = params
        self.scheme = scheme
        self.sign = sign
        self.nonlinear = nonlinear
        self.d1 = build_spectral(1.0, params).multiplier
        self.lin = theta * build_spectral(2.0, params).multiplier

    def _apply(self, mult, v):
        out = np.fft.fft(mult * np.fft.ifft(v))
        return out.real if np.isrealobj(v) else out

    def rhs(self, v):
        if not self.nonlinear:
            return np.zeros_like(v)
        return self.sign * v * self._apply(self.d1, v)

    def step(self, v: np.ndarray, h: float) -> np.ndarray:
        if self.scheme == "ETD1":
            return self._apply(np.exp(-h * self.lin), v + h * self.rhs(v))
        if self.scheme == "IMEX-EULER":
            return self._apply(1.0 / (1.0 + h * self.lin), v + h * self.rhs(v))
        # IMEX-RK2: Crank-Nicolson on the diffusion, Heun on the quadratic term
        solve = 1.0 / (1.0 + 0.5 * h * self.lin)
        explicit = 1.0 - 0.5 * h * self.lin
        n0 = self.rhs(v)
        base = self._apply(explicit, v)
        stage = self._apply(solve, base + h * n0)
        return self._apply(solve, base + 0.5 * h * (n0 + self.rhs(stage)))


@lru_cache(maxsize=32)
def _stepper(params, theta, scheme, sign, nonlinear) -> _Stepper:
    return _Stepper(params, theta, scheme, sign, nonlinear)


def _values(u: GridFunction) -> np.ndarray:
    v = u.values
    return v.real.copy() if not np.any(v.imag) else v.copy()


def step(u: GridFunction, cfg: SolverConfig, dt: float | None = None) -> GridFunction:
    """Advance one step of size ``dt`` (default ``cfg.dt``)."""
    if u.params != cfg.params:
        raise ValueError(f"grid mismatch: {u.params} vs {cfg.params}")
    v = _values(u)
    if not np.all(np.isfinite(v)):
        raise FloatingPointError("non-finite values in solver state")
    s = _stepper(cfg.params, cfg.theta, cfg.scheme, cfg.nonlinear_sign, cfg.nonlinear)
    return GridFunction(cfg.params, s.step(v, cfg.dt if dt is None else dt))


def solve_cauchy(phi: GridFunction, cfg: SolverConfig, bisect_steps: int = 30) -> SolverTrace:
    """Integrate from u(0) = phi up to cfg.T, or until ||u||_inf reaches the threshold.

    On blow-up the crossing time is bracketed by bisecting the last step;
    ``trace.blowup_bracket`` holds the final (lower, upper) pair and the
    crossing state is the last record.  Non-finite values end the run with
    status ``error``.
    """
    params = cfg.params
    if phi.params != params:
        raise ValueError(f"initial data on {phi.params}, config on {params}")
    s = _stepper(params, cfg.theta, cfg.scheme, cfg.nonlinear_sign, cfg.nonlinear)
    trace = SolverTrace()
    v = _values(phi)
    if lq_norm(v, np.inf, params) >= cfg.blowup_threshold:
        raise ValueError("initial data already exceeds the blow-up threshold")
    trace.record(0.0, v, params)
    t, n = 0.0, 0
    n_total = max(1, int(math.ceil(cfg.T / cfg.dt - 1e-9)))
    while n < n_total:
        h = cfg.dt if n < n_total - 1 else cfg.T - t
        with np.errstate(over="ignore", invalid="ignore"):
            new = s.step(v, h)
        n += 1
        if not np.all(np.isfinite(new)):
            # may be a blow-up that jumped past the threshold in one step
            lo, hi, v_hi = _bisect(s, v, t, h, new, cfg.blowup_threshold, params, bisect_steps)
            if v_hi is None:
                trace.status = "error"
                trace.last_valid_time = t
                trace.final = GridFunction(params, v)
                return trace
            trace.record(hi, v_hi, params)
            trace.status, trace.blowup_bracket = "blowup", (lo, hi)
            trace.last_valid_time, trace.final = lo, GridFunction(params, v_hi)
            return trace
        if lq_norm(new, np.inf, params) >= cfg.blowup_threshold:
            lo, hi, v_hi = _bisect(s, v, t, h, new, cfg.blowup_threshold, params, bisect_steps)
            trace.record(hi, v_hi, params)
            trace.status, trace.blowup_bracket = "blowup", (lo, hi)
            trace.last_valid_time, trace.final = lo, GridFunction(params, v_hi)
            return trace
        t = t + h if n < n_total else cfg.T
        v = new
        if n % cfg.record_every == 0 or n == n_total:
            trace.record(t, v, params)
    trace.last_valid_time = t
    trace.final = GridFunction(params, v)
    return trace


def _bisect(s, v, t, h, new, thr, params, iters):
    """Shrink [t, t + h] around the threshold crossing by halving substeps.

    Returns (lower, upper, state at upper); the state is None when every
    probe past the threshold overflowed.
    """
    lo_t, lo_v, width = t, v, h
    hi_v = new if np.all(np.isfinite(new)) else None
    for _ in range(iters):
        half = 0.5 * width
        with np.errstate(over="ignore", invalid="ignore"):
            mid = s.step(lo_v, half)
        finite = np.all(np.isfinite(mid))
        if finite and lq_norm(mid, np.inf, params) < thr:
            lo_t, lo_v = lo_t + half, mid
        elif finite:
            hi_v = mid
        width = half
    return lo_t, lo_t + width, hi_v


def scalar_ode_solution(c0: float, t, theta: float, params: GridParams, sign: float = 1.0):
    """Closed form of u' = sign lambda_1 u^2 - theta lambda_2 u, u(0) = c0.

    This is the reduction of the equation to constant data, where D^1_N and
    D^2_N act as multiplication by lambda_1 and lambda_2.
    """
    a = theta * lambda_alpha(2.0, params)
    b = sign * lambda_alpha(1.0, params)
    t = np.asarray(t, dtype=float)
    if c0 == 0:
        return np.zeros_like(t)
    return 1.0 / (b / a + (1.0 / c0 - b / a) * np.exp(a * t))


@dataclass
class ConvergenceTable:
    dts: list
    errors: list
    orders: list
    reference_dt: float
    refinement_error: float | None = None

    def rows(self):
        orders = [None] + list(self.orders)
        return list(zip(self.dts, self.errors, orders))

    def to_csv(self) -> str:
        lines = ["dt,error,order"]
        for dt, err, order in self.rows():
            lines.append(f"{dt:.17g},{err:.17g},{'' if order is None else f'{order:.6f}'}")
        return "\n".join(lines) + "\n"


def convergence_study(phi: GridFunction, cfg: SolverConfig, levels: int = 4, check_refinement: bool = True) -> ConvergenceTable:
    """Errors at time T for dt, dt/2, ..., against a reference run at dt/2^(levels-1)/8.

    Errors are sup norms; the observed order between consecutive levels is
    log2(e_k / e_{k+1}).  With ``check_refinement`` the coarsest run is
    repeated on the grid l+1 from the refined initial data and compared with
    the refinement of the l-level result.
    """
    if levels < 3:
        raise ValueError("convergence study needs at least 3 levels")
    dts = [cfg.dt / 2**k for k in range(levels)]
    ref_dt = dts[-1] / 8
    ref = solve_cauchy(phi, replace(cfg, dt=ref_dt, record_every=10**9))
    if ref.status != "completed":
        raise RuntimeError(f"reference run ended with status {ref.status}")
    errors = []
    finals = []
    for dt in dts:
        tr = solve_cauchy(phi, replace(cfg, dt=dt, record_every=10**9))
        if tr.status != "completed":
            raise RuntimeError(f"run at dt={dt} ended with status {tr.status}")
        finals.append(tr.final)
        errors.append(lq_norm(tr.final.values - ref.final.values, np.inf, cfg.params))
    orders = [math.log2(a / b) if a > 0 and b > 0 else math.nan for a, b in zip(errors, errors[1:])]
    table = ConvergenceTable(dts, errors, orders, ref_dt)
    if check_refinement:
        fine_params = cfg.params.with_l(cfg.params.l + 1)
        fine = solve_cauchy(refine(phi, fine_params.l), replace(cfg, params=fine_params, record_every=10**9))
        table.refinement_error = lq_norm(
            fine.final.values - refine(finals[0], fine_params.l).values, np.inf, fine_params
        )
    return table


def smooth_data(params: GridParams, scale: float = 0.1) -> GridFunction:
    """Low-frequency initial data: a constant plus the coarsest nontrivial characters."""
    k = np.arange(params.dim)
    coarse = params.dim // params.p
    v = np.full(params.dim, 0.5)
    for m in range(coarse, params.dim, coarse):
        # characters with |eta| = p^(-N+1), the lowest nonzero frequency
        v = v + np.cos(2 * np.pi * k * m / params.dim) / m * coarse
    return GridFunction(params, scale * v / np.max(np.abs(v)))


def initial_data(params: GridParams, kind: str, seed: int = 0, scale: float = 1.0) -> GridFunction:
    from .grid import make_test_function

    if kind == "smooth":
        return smooth_data(params, scale)
    if kind == "constant":
        return GridFunction.constant(params, scale)
    f = make_test_function(params, kind, seed=seed)
    return GridFunction(params, scale * f.values.real)


def mass(u: GridFunction) -> float:
    return haar_integral(u).real
