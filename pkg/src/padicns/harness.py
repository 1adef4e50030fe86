"""Sampling estimates of the best constants in the L^q operator inequalities.

Each ``verify_*`` function samples functions u in D_N^l, evaluates the ratio
of the two sides, and returns an :class:`InequalityReport` holding the
largest ratio seen.  Sample ``i`` is drawn from its own generator seeded by
``(seed, i)``, so a report does not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import GridFunction, convolve, lq_norm
from .operators import build_spectral, kernel_I_grid, lambda_alpha
from .padic import GridParams

DEGENERATE = 1e-13
INEQUALITIES = ("prop3", "prop4", "young", "vonwahl")


@dataclass
class InequalityReport:
    inequality: str
    params: dict
    samples: int
    seed: int
    empirical_constant: float
    exact_constant: float | None = None
    condition_satisfied: bool | None = None
    skipped: int = 0
    refined_constant: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return "exploratory" if self.condition_satisfied is False else "verified"

    @property
    def refinement_drift(self) -> float | None:
        if self.refined_constant is None:
            return None
        return abs(self.refined_constant / self.empirical_constant - 1.0)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["label"] = self.label
        return d

    @classmethod
    def from_dict(cls, d: dict) -> InequalityReport:
        d = dict(d)
        d.pop("label", None)
        return cls(**d)


def emit_report(report: InequalityReport, fmt: str = "json") -> str:
    """Serialize a report deterministically (sorted keys, repr-exact floats)."""
    if fmt == "json":
        return json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "value"])
        for k, v in sorted(_flatten(report.to_dict()).items()):
            w.writerow([k, "" if v is None else v])
        return buf.getvalue()
    raise ValueError(f"unknown report format {fmt!r}")


def parse_report(text: str) -> InequalityReport:
    return InequalityReport.from_dict(json.loads(text))


def write_report(report: InequalityReport, path, fmt: str | None = None):
    fmt = fmt or ("csv" if str(path).endswith(".csv") else "json")
    with open(path, "w") as fh:
        fh.write(emit_report(report, fmt))


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def sample_function(params: GridParams, seed: int, i: int, complex_values: bool = False) -> np.ndarray:
    """Sample ``i`` of the stream: even indices are Gaussian, odd ones structured.

    The structured stream starts with the constant function and then cycles
    through characters, cell indicators and mean-zero noise, which is where
    eigenfunction-type extremal ratios are found.
    """
    rng = np.random.default_rng([seed, i])
    dim = params.dim
    if i % 2 == 0:
        v = rng.standard_normal(dim)
        if complex_values:
            v = v + 1j * rng.standard_normal(dim)
        return v
    j = i // 2
    if j == 0:
        return np.ones(dim)
    kind = j % 3
    k = np.arange(dim)
    if kind == 1:
        m = int(rng.integers(dim))
        v = np.exp(2j * np.pi * (k * m % dim) / dim)
        return v if complex_values else v.real + v.imag
    if kind == 2:
        v = np.zeros(dim)
        v[int(rng.integers(dim))] = 1.0
        return v
    v = rng.standard_normal(dim)
    return v - v.mean()


def _max_ratio(num, den, params, samples, seed, complex_values=False):
    best, skipped = 0.0, 0
    for i in range(samples):
        u = sample_function(params, seed, i, complex_values)
        d = den(u)
        if d < DEGENERATE:
            skipped += 1
            continue
        best = max(best, num(u) / d)
    return best, skipped


def prop3_ratio(u: np.ndarray, alpha: float, beta: float, q: float, params: GridParams) -> float:
    """||D^alpha u||_q / ||(D^beta)^(alpha/beta) u||_q."""
    a = build_spectral(alpha, params)
    b = build_spectral(beta, params).power(alpha / beta)
    return lq_norm(a.apply_values(u), q, params) / lq_norm(b.apply_values(u), q, params)


def prop4_ratio(u: np.ndarray, alpha: float, beta: float, q: float, r: float, params: GridParams) -> float:
    """||D^alpha u||_r / ||D^beta u||_q."""
    a = build_spectral(alpha, params)
    b = build_spectral(beta, params)
    return lq_norm(a.apply_values(u), r, params) / lq_norm(b.apply_values(u), q, params)


def prop3_exact_l2(alpha: float, beta: float, params: GridParams) -> float:
    lam_a = lambda_alpha(alpha, params)
    lam_b = lambda_alpha(beta, params)
    return max(1.0, lam_a / lam_b ** (alpha / beta))


def _prop3_constant(alpha, beta, q, params, samples, seed):
    a = build_spectral(alpha, params)
    b = build_spectral(beta, params).power(alpha / beta)
    return _max_ratio(
        lambda u: lq_norm(a.apply_values(u), q, params),
        lambda u: lq_norm(b.apply_values(u), q, params),
        params,
        samples,
        seed,
    )


def verify_prop3(
    alpha: float,
    beta: float,
    q: float,
    params: GridParams,
    samples: int = 2000,
    seed: int = 0,
    refine: bool = True,
) -> InequalityReport:
    """||D^alpha_N u||_q <= C ||(D^beta_N)^(alpha/beta) u||_q.

    For q = 2 the best constant is the largest eigenvalue ratio,
    max(1, lambda_alpha / lambda_beta^(alpha/beta)).
    """
    if not 0 < alpha <= beta:
        raise ValueError(f"need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")
    if q < 1:
        raise ValueError(f"need q >= 1, got {q}")
    if samples < 1:
        raise ValueError("need at least one sample")
    best, skipped = _prop3_constant(alpha, beta, q, params, samples, seed)
    report = InequalityReport(
        inequality="prop3",
        params=_param_dict(params, alpha=alpha, beta=beta, q=q),
        samples=samples,
        seed=seed,
        empirical_constant=best,
        exact_constant=prop3_exact_l2(alpha, beta, params) if q == 2 else None,
        skipped=skipped,
    )
    if refine:
        report.refined_constant = _prop3_constant(alpha, beta, q, params.with_l(params.l + 1), samples, seed)[0]
    return report


def prop4_condition(alpha: float, beta: float, q: float, r: float) -> bool:
    """alpha - beta + 1/q < 1/r <= 1/q."""
    return alpha - beta + 1.0 / q < 1.0 / r <= 1.0 / q


def _check_prop4(alpha, beta, q, r):
    if not (0 < alpha < beta <= alpha + 1 and beta > 1):
        raise ValueError(f"need 0 < alpha < beta <= alpha + 1 and beta > 1, got alpha={alpha}, beta={beta}")
    if not 1 <= q <= r:
        raise ValueError(f"need 1 <= q <= r, got q={q}, r={r}")


def _prop4_constant(alpha, beta, q, r, params, samples, seed):
    a = build_spectral(alpha, params)
    b = build_spectral(beta, params)
    return _max_ratio(
        lambda u: lq_norm(a.apply_values(u), r, params),
        lambda u: lq_norm(b.apply_values(u), q, params),
        params,
        samples,
        seed,
    )


def verify_prop4(
    alpha: float,
    beta: float,
    q: float,
    r: float,
    params: GridParams,
    samples: int = 2000,
    seed: int = 0,
    refine: bool = True,
) -> InequalityReport:
    """||D^alpha_N u||_r <= C ||D^beta_N u||_q under alpha - beta + 1/q < 1/r <= 1/q.

    When the condition fails the constants are still estimated and the
    report is labelled exploratory.
    """
    _check_prop4(alpha, beta, q, r)
    best, skipped = _prop4_constant(alpha, beta, q, r, params, samples, seed)
    exact = None
    if q == 2 and r == 2:
        a = build_spectral(alpha, params)
        b = build_spectral(beta, params)
        exact = float(np.max(a.eigenvalues / b.eigenvalues))
    report = InequalityReport(
        inequality="prop4",
        params=_param_dict(params, alpha=alpha, beta=beta, q=q, r=r),
        samples=samples,
        seed=seed,
        empirical_constant=best,
        exact_constant=exact,
        condition_satisfied=prop4_condition(alpha, beta, q, r),
        skipped=skipped,
    )
    if refine:
        report.refined_constant = _prop4_constant(alpha, beta, q, r, params.with_l(params.l + 1), samples, seed)[0]
    return report


def young_exponent(q: float, r: float) -> float:
    """s with 1/s + 1/q = 1 + 1/r."""
    inv = 1.0 + 1.0 / r - 1.0 / q
    if inv <= 0:
        return math.inf
    return 1.0 / inv


def young_s_admissible(alpha: float, beta: float, s: float) -> bool:
    """1 <= s < 1/(alpha - beta + 1), the range where I lies in L^s uniformly in l."""
    e = alpha - beta + 1.0
    return s >= 1 and (e <= 0 or s < 1.0 / e)


def verify_young(
    alpha: float,
    beta: float,
    q: float,
    r: float,
    params: GridParams,
    samples: int = 2000,
    seed: int = 0,
) -> InequalityReport:
    """||I * f||_r <= ||I||_s ||f||_q for the kernel I of D^alpha (D^beta)^-1 minus its mean part.

    The empirical constant is the largest observed ratio
    ||I * f||_r / (||I||_s ||f||_q); Young's inequality bounds it by 1.
    """
    _check_prop4(alpha, beta, q, r)
    s = young_exponent(q, r)
    kern = kernel_I_grid(alpha, beta, params)
    norm_i = lq_norm(kern, s)
    best, skipped = _max_ratio(
        lambda f: lq_norm(convolve(kern, GridFunction(params, f)).values, r, params),
        lambda f: norm_i * lq_norm(f, q, params),
        params,
        samples,
        seed,
    )
    return InequalityReport(
        inequality="young",
        params=_param_dict(params, alpha=alpha, beta=beta, q=q, r=r, s=s),
        samples=samples,
        seed=seed,
        empirical_constant=best,
        exact_constant=1.0,
        condition_satisfied=young_s_admissible(alpha, beta, s),
        skipped=skipped,
        extra={"kernel_norm_s": norm_i},
    )


def nonlinearity(v: np.ndarray, d1) -> np.ndarray:
    """M(v) = v * D^1_N v."""
    return v * d1.apply_values(v).real


def von_wahl_constants(
    q: float,
    r: float,
    s: float,
    rho: float,
    h: float,
    params: GridParams,
    samples: int = 1000,
    seed: int = 0,
    theta: float = 1.0,
) -> InequalityReport:
    """Empirical k(h) for M(u) = u D^1_N u against A = theta D^2_N.

    Pairs (v, w) are rescaled onto ``||Av||_q + ||Aw||_q = h * c_i`` with a
    per-sample factor c_i in (0, 1], so runs at different h see the same
    directions.  Reported constants:

    * ``bound``: max ||M(v)||_q, ||M(w)||_q
    * ``lipschitz``: max ||M(v) - M(w)||_q / ||A^(1-rho)(v - w)||_q
    * ``lipschitz_unscaled``: the same with D^(2(1-rho))_N in place of A^(1-rho)

    ``empirical_constant`` is the larger of ``bound`` and ``lipschitz``.
    """
    if not math.isclose(1.0 / r + 1.0 / s, 1.0, rel_tol=1e-12):
        raise ValueError(f"need 1/r + 1/s = 1, got r={r}, s={s}")
    rho_max = 0.5 * (1.0 - 1.0 / (q * r))
    if not 0 < rho < rho_max:
        raise ValueError(f"need 0 < rho < (1 - 1/(q r))/2 = {rho_max}, got {rho}")
    if h <= 0:
        raise ValueError(f"h must be positive, got {h}")
    d1 = build_spectral(1.0, params)
    d2 = build_spectral(2.0, params)
    frac = d2.power(1.0 - rho)
    a_frac_scale = theta ** (1.0 - rho)

    def a_norm(u):
        return theta * lq_norm(d2.apply_values(u).real, q, params)

    bound = lip = lip_unscaled = holder = 0.0
    skipped = 0
    for i in range(samples):
        rng = np.random.default_rng([seed, i, 1])
        v = sample_function(params, seed, 2 * i)
        kind = i % 3
        if kind == 0:
            w = v.copy()
        elif kind == 1:
            w = v + 1e-3 * rng.standard_normal(params.dim)
        else:
            w = sample_function(params, seed, 2 * i + 1)
        c = h * rng.uniform(0.05, 1.0) / (a_norm(v) + a_norm(w))
        v, w = c * v, c * w
        mv, mw = nonlinearity(v, d1), nonlinearity(w, d1)
        bound = max(bound, lq_norm(mv, q, params), lq_norm(mw, q, params))
        rhs = lq_norm(v, q * r, params) * lq_norm(d1.apply_values(v).real, q * s, params)
        if rhs >= DEGENERATE:
            holder = max(holder, lq_norm(mv, q, params) / rhs)
        den = lq_norm(frac.apply_values(v - w).real, q, params)
        if den * a_frac_scale < DEGENERATE:
            skipped += 1
            continue
        diff = lq_norm(mv - mw, q, params)
        lip = max(lip, diff / (a_frac_scale * den))
        lip_unscaled = max(lip_unscaled, diff / den)
    return InequalityReport(
        inequality="vonwahl",
        params=_param_dict(params, q=q, r=r, s=s, rho=rho, h=h, theta=theta),
        samples=samples,
        seed=seed,
        empirical_constant=max(bound, lip),
        condition_satisfied=True,
        skipped=skipped,
        extra={
            "bound": bound,
            "lipschitz": lip,
            "lipschitz_unscaled": lip_unscaled,
            "holder_ratio": holder,
        },
    )


def _param_dict(params: GridParams, **kw) -> dict:
    d = {"p": params.p, "N": params.N, "l": params.l}
    d.update({k: float(v) for k, v in kw.items()})
    return d
