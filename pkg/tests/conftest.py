import itertools
from contextlib import contextmanager
from fractions import Fraction

import pytest

from padicns.padic import GridParams

DESK_GRIDS = [
    GridParams(p, N, l)
    for p, N, l in itertools.product((2, 3), (0, 1, 2), (1, 2, 3))
    if p ** (N + l) <= 243
]

ACCEPTANCE = []


@contextmanager
def criterion(name):
    """Record one acceptance criterion as PASS/FAIL for the end-of-run summary."""
    try:
        yield
    except BaseException:
        ACCEPTANCE.append((name, False))
        print(f"FAIL  {name}")
        raise
    ACCEPTANCE.append((name, True))
    print(f"PASS  {name}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


def valuation(x: Fraction, p: int) -> int | None:
    """Brute-force v_p of a rational; None for zero."""
    if x == 0:
        return None
    v = 0
    num, den = x.numerator, x.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def frac_by_digits(x: Fraction, p: int) -> Fraction:
    """{x}_p from the canonical digit expansion, for x with p-power denominator."""
    v = valuation(x, p)
    if v is None or v >= 0:
        return Fraction(0)
    M = -v
    a = x * Fraction(p) ** M  # p-adic unit, an integer here
    assert a.denominator == 1
    a = a.numerator
    digits = []
    for _ in range(M):
        a, d = divmod(a, p)
        digits.append(d)
    return Fraction(sum(d * p**i for i, d in enumerate(digits)), p**M)


@pytest.fixture(params=DESK_GRIDS, ids=lambda g: f"p{g.p}N{g.N}l{g.l}")
def desk_grid(request):
    return request.param
