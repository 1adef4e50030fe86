import math
from fractions import Fraction

import numpy as np
import pytest

from conftest import DESK_GRIDS
from padicns.grid import GridFunction, character_matrix, convolve, haar_integral, lq_norm, make_test_function
from padicns.operators import (
    bochner_inverse_power,
    build_hypersingular,
    build_spectral,
    fractional_power,
    hypersingular_constant,
    internal_integral,
    kernel_I,
    kernel_I_grid,
    kernel_I_shell_sum,
    lambda_alpha,
    projection_constants,
    resolvent_apply,
    resolvent_kernel,
    spectral_map,
    summarize,
)
from padicns.padic import GridParams, abs_value, dual_abs_exponents

ALPHAS = (0.5, 1.0, 2.0, 3.0)


def lambda_exact(alpha: int, p: int, N: int) -> Fraction:
    """Rational evaluation of (p-1)/(p^(alpha+1)-1) p^(alpha(1-N)) for integer alpha."""
    return Fraction(p - 1, p ** (alpha + 1) - 1) * Fraction(p) ** (alpha * (1 - N))


def test_lambda_examples():
    assert lambda_alpha(2, GridParams(2, 0, 1)) == pytest.approx(4 / 7, rel=1e-15)
    assert lambda_alpha(1, GridParams(2, 1, 1)) == pytest.approx(1 / 3, rel=1e-15)
    for N in range(3):
        assert lambda_alpha(1.5, GridParams(3, N + 1, 1)) < lambda_alpha(1.5, GridParams(3, N, 1))
    with pytest.raises(ValueError):
        lambda_alpha(0, GridParams(2, 1, 1))


def test_lambda_matches_rational_formula(desk_grid):
    g = desk_grid
    for a in (1, 2, 3):
        assert lambda_alpha(a, g) == pytest.approx(float(lambda_exact(a, g.p, g.N)), rel=1e-15)


def test_constants_are_lambda_eigenfunction(desk_grid):
    for a in ALPHAS:
        op = build_hypersingular(a, desk_grid)
        out = op(GridFunction.constant(desk_grid))
        # cancellation in the zero-coset weight is relative to the spectral radius
        assert np.max(np.abs(out.values - op.lambda_alpha)) < 1e-15 * np.max(op.eigenvalues) + 1e-14


def test_row_sums_give_lambda(desk_grid):
    # the matrix acts on cell values; (D 1)(x) = sum_y A[x, y]
    for a in ALPHAS:
        op = build_hypersingular(a, desk_grid)
        rows = op.matrix.sum(axis=1)
        assert np.max(np.abs(rows - lambda_alpha(a, desk_grid))) < 1e-15 * np.max(op.eigenvalues) + 1e-14


def _hypersingular_direct(alpha, params, phi):
    """lambda phi(x) + c_alpha sum over cells y != 0 of p^-l |y|^(-alpha-1) (phi(x-y) - phi(x))."""
    out = np.empty(params.dim)
    c = hypersingular_constant(alpha, params.p)
    lam = lambda_alpha(alpha, params)
    for x in range(params.dim):
        s = 0.0
        for y in range(1, params.dim):
            ay = float(abs_value(y, params).value)
            s += params.cell_measure * ay ** (-alpha - 1) * (phi[(x - y) % params.dim] - phi[x])
        out[x] = lam * phi[x] + c * s
    return out


@pytest.mark.parametrize("g", [g for g in DESK_GRIDS if g.dim <= 27], ids=str)
def test_hypersingular_matches_direct_sum(g):
    phi = np.random.default_rng(0).standard_normal(g.dim)
    for a in (0.5, 2.0):
        op = build_hypersingular(a, g)
        assert np.max(np.abs(op.matrix @ phi - _hypersingular_direct(a, g, phi))) < 1e-10


def test_build_agreement_example():
    g = GridParams(2, 1, 2)
    h, s = build_hypersingular(1, g), build_spectral(1, g)
    assert np.max(np.abs(h.matrix - s.matrix)) <= 1e-10


def test_matrix_symmetric_positive(desk_grid):
    for a in ALPHAS:
        op = build_hypersingular(a, desk_grid)
        A = op.matrix
        assert np.max(np.abs(A - A.T)) < 1e-12
        ev = np.linalg.eigvalsh(A)
        assert ev.min() > 0
        assert ev.min() == pytest.approx(op.lambda_alpha, rel=1e-9)


def test_spectral_map_values(desk_grid):
    g = desk_grid
    for a in ALPHAS:
        m = spectral_map(a, g)
        assert m[0] == lambda_alpha(a, g)
        allowed = [float(g.p) ** (a * n) for n in range(-g.N + 1, g.l + 1)]
        assert all(min(abs(v - w) for w in allowed) < 1e-12 * max(allowed) for v in m[1:])
    m1, m2 = spectral_map(1, g), spectral_map(2, g)
    assert np.array_equal(m2[1:], m1[1:] ** 2)


def test_character_is_eigenfunction(desk_grid):
    g = desk_grid
    op = build_hypersingular(1.5, g)
    s = dual_abs_exponents(g)
    for m in range(1, g.dim):
        chi = make_test_function(g, "character", index=m)
        # chi(eta_m x) pairs with the dual point -eta_m, of the same norm
        expected = float(g.p) ** (1.5 * s[m]) * chi.values
        assert np.max(np.abs(op(chi).values - expected)) < 1e-10 * max(1, abs(expected[0]))


def test_internal_integral_identity(desk_grid):
    g = desk_grid
    s = dual_abs_exponents(g)
    for a in ALPHAS:
        lam = lambda_alpha(a, g)
        for m in range(1, g.dim):
            val = internal_integral(a, m, g)
            assert abs(val - (float(g.p) ** (a * s[m]) - lam)) < 1e-12 * max(1, float(g.p) ** (a * s[m]))


def test_internal_integral_unnormalized_differs_by_constant():
    g = GridParams(3, 1, 2)
    c = hypersingular_constant(1.0, 3)
    for m in range(1, g.dim):
        assert internal_integral(1.0, m, g) == pytest.approx(c * internal_integral(1.0, m, g, normalized=False))
    assert c < 0


def test_operators_commute(desk_grid):
    A = build_hypersingular(1.0, desk_grid).matrix
    B = build_hypersingular(2.5, desk_grid).matrix
    assert np.max(np.abs(A @ B - B @ A)) < 1e-10 * max(1, np.max(np.abs(A @ B)))


def test_fractional_power_examples():
    g = GridParams(2, 1, 2)
    op = build_spectral(2, g)
    assert fractional_power(op, 1) is op
    with pytest.raises(ValueError):
        fractional_power(op, 0)
    with pytest.raises(ValueError):
        fractional_power(op, 1.5)


def test_rank_one_identity(desk_grid):
    g = desk_grid
    for alpha, beta in ((0.5, 1.0), (1.0, 2.0), (1.5, 2.0), (2.0, 3.0)):
        lhs = fractional_power(build_spectral(beta, g), alpha / beta).matrix
        rhs = build_hypersingular(alpha, g).matrix
        shift = lambda_alpha(beta, g) ** (alpha / beta) - lambda_alpha(alpha, g)
        P0 = projection_constants(g).matrix
        assert np.max(np.abs(lhs - rhs - shift * P0)) < 1e-10


def test_projection_is_mean():
    g = GridParams(3, 1, 1)
    f = make_test_function(g, "random", seed=1)
    out = projection_constants(g)(f)
    assert np.max(np.abs(out.values - haar_integral(f) * g.dual_cell_measure)) < 1e-14


@pytest.mark.parametrize("beta,gamma", [(2.0, 0.5), (2.0, 0.75), (1.0, 1.0), (3.0, 0.5)])
def test_bochner_quadrature_matches_spectral_inverse_power(beta, gamma):
    g = GridParams(2, 0, 2)
    op = build_spectral(beta, g)
    for seed in range(3):
        f = make_test_function(g, "random", seed=seed)
        spectral = op.power(-gamma)(f)
        assert np.max(np.abs(bochner_inverse_power(op, gamma, f).values - spectral.values)) < 1e-6


def test_bochner_on_larger_grid():
    g = GridParams(3, 1, 2)
    op = build_spectral(2.0, g)
    f = make_test_function(g, "random", seed=5)
    diff = bochner_inverse_power(op, 0.5, f).values - op.power(-0.5)(f).values
    assert np.max(np.abs(diff)) < 1e-6


def character_basis_inverse(beta, params):
    """Dense inverse assembled from the character basis and the closed-form eigenvalues."""
    chi = character_matrix(params)
    return (chi.conj().T * (1.0 / spectral_map(beta, params))) @ chi / params.dim


def test_character_basis_inverse_is_inverse():
    g = GridParams(2, 1, 2)
    A = build_hypersingular(2.0, g).matrix
    assert np.max(np.abs(character_basis_inverse(2.0, g) @ A - np.eye(g.dim))) < 1e-12


def test_resolvent_matches_matrix_inverse(desk_grid):
    g = desk_grid
    for beta in (0.5, 1.0, 2.0, 3.0):
        Ainv = character_basis_inverse(beta, g)
        A = build_hypersingular(beta, g).matrix
        cond = np.linalg.cond(A)
        for seed in range(3):
            f = make_test_function(g, "random", seed=seed)
            res = resolvent_apply(beta, f).values
            assert np.max(np.abs(res - Ainv @ f.values)) < 1e-10
            # a generic dense inverse is only as good as the conditioning allows
            direct = np.linalg.inv(A) @ f.values
            assert np.max(np.abs(res - direct)) < 1e-10 + 10 * cond * 2.2e-16 * np.max(np.abs(res))


def test_resolvent_round_trip(desk_grid):
    g = desk_grid
    op = build_spectral(2.0, g)
    f = make_test_function(g, "random", seed=4, complex_values=True)
    assert np.max(np.abs(op(resolvent_apply(2.0, f)).values - f.values)) < 1e-10


def test_resolvent_kernel_is_real_and_even(desk_grid):
    K = resolvent_kernel(1.5, desk_grid)
    assert np.max(np.abs(K.values.imag)) <= 1e-12
    assert np.max(np.abs(K.values - K.reflect().values)) < 1e-12


def test_resolvent_kernel_against_dual_sum():
    """K(x) as the dual-grid sum of chi(eta x) |eta|^-beta over nontrivial eta."""
    g = GridParams(2, 1, 3)
    s = dual_abs_exponents(g)
    k = np.arange(g.dim)
    for x in range(g.dim):
        chi = np.exp(2j * np.pi * (k * x % g.dim) / g.dim)
        val = g.dual_cell_measure * np.sum(chi[1:] * float(g.p) ** (-2.0 * s[1:]))
        assert resolvent_kernel(2.0, g).values[x] == pytest.approx(val.real, abs=1e-12)


def test_resolvent_rejects_bad_beta():
    with pytest.raises(ValueError):
        resolvent_kernel(0.0, GridParams(2, 1, 1))


PROP4_PAIRS = [(1.0, 2.0), (1.5, 2.0), (0.5, 1.2), (2.0, 2.5)]


def test_kernel_I_closed_form_matches_shell_sum(desk_grid):
    g = desk_grid
    for alpha, beta in PROP4_PAIRS:
        for z in range(1, g.dim):
            assert kernel_I(alpha, beta, g, z) == pytest.approx(kernel_I_shell_sum(alpha, beta, g, z), abs=1e-12)


def test_kernel_I_outer_shell_example():
    g = GridParams(3, 2, 1)
    alpha, beta = 1.0, 1.5
    z = 1  # lowest digit at index 0 -> |z| = p^N
    assert abs_value(z, g).exponent == g.N
    expected = -(3.0 ** (alpha - beta)) * 3.0 ** (-g.N * (alpha - beta + 1))
    assert kernel_I(alpha, beta, g, z) == pytest.approx(expected, rel=1e-14)


def test_kernel_I_grid_matches_pointwise(desk_grid):
    grid = kernel_I_grid(1.5, 2.0, desk_grid).values
    for z in range(desk_grid.dim):
        assert grid[z] == pytest.approx(kernel_I(1.5, 2.0, desk_grid, z), abs=1e-12)


def test_kernel_I_represents_operator_quotient():
    """D^alpha (D^beta)^-1 = I * . plus the constant mode lambda_alpha / lambda_beta."""
    for g in (GridParams(2, 1, 3), GridParams(3, 2, 1)):
        alpha, beta = 1.0, 2.0
        A, B = build_spectral(alpha, g), build_spectral(beta, g)
        f = make_test_function(g, "random", seed=2)
        lhs = A(B.inverse()(f)).values
        rhs = convolve(kernel_I_grid(alpha, beta, g), f).values
        rhs = rhs + lambda_alpha(alpha, g) / lambda_alpha(beta, g) * haar_integral(f) * g.dual_cell_measure
        assert np.max(np.abs(lhs - rhs)) < 1e-10


def _weighted_I_max(alpha, beta, g):
    e = alpha - beta + 1
    return max(abs(kernel_I(alpha, beta, g, z)) * float(abs_value(z, g).value) ** e for z in range(1, g.dim))


def _grids(p):
    return [GridParams(p, N, l) for N in range(5) for l in range(1, 5) if p ** (N + l) <= 4096]


def test_kernel_I_weighted_bound_is_grid_uniform():
    """|I(z)| |z|^(alpha-beta+1) stays below one constant as N and l grow (beta < alpha + 1)."""
    for p in (2, 3):
        for alpha, beta in PROP4_PAIRS:
            e = alpha - beta + 1
            if e == 0:
                continue
            bounds = [_weighted_I_max(alpha, beta, g) for g in _grids(p)]
            # geometric series in p^-e plus the boundary term
            C = (1 - 1 / p) / (1 - float(p) ** (-e)) + float(p) ** (e - 1)
            assert max(bounds) <= C * (1 + 1e-12)


def test_kernel_I_endpoint_grows_logarithmically():
    """At beta = alpha + 1 the series has N - j equal terms, so sup |I| grows like N + l."""
    p = 2
    sups = []
    for N in range(5):
        g = GridParams(p, N, 3)
        expected = max(1 / p, (1 - 1 / p) * (N + g.l - 1) - 1 / p)
        sups.append(_weighted_I_max(1.0, 2.0, g))
        assert sups[-1] == pytest.approx(expected, rel=1e-12)
    assert all(b > a for a, b in zip(sups[1:], sups[2:]))


def test_kernel_I_range_checks():
    g = GridParams(2, 1, 2)
    for alpha, beta in ((2.0, 1.0), (1.0, 2.5), (0.5, 0.9)):
        with pytest.raises(ValueError):
            kernel_I(alpha, beta, g, 1)


def test_prop3_l2_constant_from_spectrum(desk_grid):
    g = desk_grid
    for alpha, beta in ((1.0, 2.0), (0.5, 3.0)):
        ratio = build_spectral(alpha, g).eigenvalues / build_spectral(beta, g).power(alpha / beta).eigenvalues
        exact = max(1.0, lambda_alpha(alpha, g) / lambda_alpha(beta, g) ** (alpha / beta))
        assert np.max(ratio) == pytest.approx(exact, rel=1e-12)


def test_summary_json():
    g = GridParams(2, 1, 1)
    d = summarize(build_hypersingular(2.0, g)).to_json()
    assert set(d) == {"params", "alpha", "lambda", "matrix", "eigenvalues"}
    assert len(d["matrix"]) == g.dim**2
    assert d["lambda"] == lambda_alpha(2.0, g)
    assert sorted(d["eigenvalues"]) == pytest.approx(sorted(spectral_map(2.0, g)))


def test_apply_rejects_grid_mismatch():
    op = build_spectral(1.0, GridParams(2, 1, 2))
    with pytest.raises(ValueError):
        op(GridFunction.constant(GridParams(2, 1, 3)))


def test_l2_norm_of_constant_under_operator():
    g = GridParams(3, 1, 2)
    op = build_spectral(1.0, g)
    c = GridFunction.constant(g, 2.0)
    assert lq_norm(op(c), 2) == pytest.approx(lambda_alpha(1.0, g) * lq_norm(c, 2))
    assert math.isclose(op.eigenvalues.min(), lambda_alpha(1.0, g))
