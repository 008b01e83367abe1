from fractions import Fraction

import mpmath
import pytest

from avoidset.arith import AlgebraicField, FqContext, PadicContext, QQ, parse_poly
from avoidset.geometry import Cube, real_grid, ultra_grid
from avoidset.landmark.audit import audit_system
from avoidset.landmark.contfrac import cf_quadratic, cf_rational, convergents
from avoidset.landmark.pairs import build_rational_approx_pair, derive_polynomial_pair
from avoidset.landmark.systems import (AlgebraicSystem, DyadicSystem, FunctionFieldSystem, PadicSystem,
                                       ell_value, enumerate_landmarks, nearest_landmark)

mpmath.mp.dps = 60
SQRT2 = AlgebraicField([-2, 0, 1], [1, 2])
GOLDEN = AlgebraicField([-1, -1, 1], [1, 2])


def _alg_value(a0, a1, n):
    return (mpmath.mpf(a0) + a1 * mpmath.sqrt(2)) / 2 ** n


def _alg_brute(w, k):
    """All (value, canonical (a0, a1, n)) with n <= k and |a_i| <= w 2^n."""
    seen = {}
    for n in range(k + 1):
        b = w * 2 ** n
        for a0 in range(-b, b + 1):
            for a1 in range(-b, b + 1):
                m, x0, x1 = n, a0, a1
                while m > 0 and x0 % 2 == 0 and x1 % 2 == 0:
                    x0, x1, m = x0 // 2, x1 // 2, m - 1
                seen[(x0, x1, m)] = _alg_value(x0, x1, m)
    return seen


# ---------------------------------------------------------------- ell_value

def test_ell_dyadic():
    d = DyadicSystem()
    assert ell_value(d, 1, Fraction(3, 8)) == 3
    assert ell_value(d, 1, 0) == 0


def test_ell_function_field_is_degree():
    F = FqContext(3, 6)
    assert ell_value(FunctionFieldSystem(F), 1, F([1, 0, 1])) == 2


# ---------------------------------------------------------------- enumerate_landmarks

def test_enumerate_dyadic_quarter():
    got = enumerate_landmarks(DyadicSystem(), 1, Cube((0,), 2, real_grid(1)), 3)
    assert got == [0, Fraction(1, 8)]


def test_enumerate_function_field_ball():
    F = FqContext(3, 6)
    t = F([0, 1])
    ball = Cube((F.code(t, 2),), 2, ultra_grid(1, F))
    got = enumerate_landmarks(FunctionFieldSystem(F), 1, ball, 2)
    assert got == [F([0, 1]), F([0, 1, 1]), F([0, 1, 2])]


def test_enumerate_algebraic_against_coefficient_scan():
    sys = AlgebraicSystem(SQRT2)
    lo, hi = Fraction(29, 100), Fraction(31, 100)
    got = sys.enumerate(1, lo, hi, 2, closed=True)
    mlo, mhi = mpmath.mpf(lo.numerator) / lo.denominator, mpmath.mpf(hi.numerator) / hi.denominator
    want = sorted(key for key, val in _alg_brute(1, 2).items() if mlo <= val <= mhi)
    assert sorted((y.coeffs[0], y.coeffs[1], y.scale) for y in got) == want
    assert len(want) > 0


# ---------------------------------------------------------------- nearest_landmark

def test_nearest_dyadic():
    assert nearest_landmark(DyadicSystem(), 1, Fraction(3, 10), 4) == Fraction(5, 16)


def test_nearest_padic_truncates():
    P = PadicContext(3, 6)
    x = P(sum(3 ** i for i in range(6)))
    assert nearest_landmark(PadicSystem(P), 1, x, 2).signed() == 13


def test_nearest_algebraic_against_scan():
    y = nearest_landmark(AlgebraicSystem(SQRT2), 1, Fraction(3, 10), 3)
    x = mpmath.mpf(3) / 10
    brute = _alg_brute(1, 3)
    best = min(abs(v - x) for v in brute.values())
    assert abs(_alg_value(y.coeffs[0], y.coeffs[1], y.scale) - x) == best


# ---------------------------------------------------------------- polynomial pairs

def test_pair_xy_dyadic_exact():
    d = DyadicSystem()
    p = parse_poly("x*y", 1, 2, QQ, ["x", "y"])
    pair = derive_polynomial_pair(d, p)
    assert pair.degree == 2 and pair.const == 0
    for j in range(5):
        for a in range(2 ** j + 1):
            for b in range(2 ** j + 1):
                x, y = Fraction(a, 2 ** j), Fraction(b, 2 ** j)
                assert d.ell(1, x * y) <= d.ell(1, x) + d.ell(1, y)


def test_pair_ap_padic_constant_at_most_two():
    P = PadicContext(3, 6)
    f = parse_poly("x - 2*y + z", 1, 3, P, ["x", "y", "z"])
    pair = derive_polynomial_pair(PadicSystem(P), f)
    assert pair.degree == 1
    assert pair.const <= 2


def test_pair_quadratic_dyadic_exhaustive():
    d = DyadicSystem()
    p = parse_poly("x^2 + x + 1", 1, 1, QQ, ["x"])
    pair = derive_polynomial_pair(d, p)
    for j in range(7):
        for a in range(-2 ** j, 2 ** j + 1):
            x = Fraction(a, 2 ** j)
            assert d.ell_unchecked(x * x + x + 1) <= 2 * j
            assert d.ell_unchecked(x * x + x + 1) <= pair.bound(d.ell_unchecked(x))


def test_rational_coefficients_every_level_exact():
    p = parse_poly("3/4*x^2 - 1/2*x", 1, 1, QQ, ["x"])
    alpha = Fraction(3)
    pair = build_rational_approx_pair(p, 1, alpha, budget=8)
    m = 2
    for j in range(1, 9):
        if j >= m / alpha:
            assert pair.in_J(j)
            assert pair.witness_error(j) == 0


def _fibonacci_upto(n):
    a, b = 1, 1
    out = [1]
    while b <= n:
        out.append(b)
        a, b = b, a + b
    return sorted(set(out))


def test_golden_ratio_witnesses_are_fibonacci_convergents():
    phi = GOLDEN.theta()
    p = parse_poly("theta*x", 1, 1, GOLDEN, ["x"])
    alpha = Fraction(2)
    budget = 12
    pair = build_rational_approx_pair(p, 1, alpha, budget)
    fib = _fibonacci_upto(2 ** (alpha * budget + 2))
    golden = (1 + mpmath.sqrt(5)) / 2
    assert phi.coeffs == (0, 1)
    for j in range(1, budget + 1):
        lo, hi = 2 ** (alpha * (j - 1)), 2 ** (alpha * j)
        dens = [f for f in fib if lo <= f < hi]
        if pair.in_J(j):
            wit = pair.J[j]
            assert wit.c in dens
            # the convergent numerator is the next Fibonacci number
            assert abs(wit.c * golden - wit.y[0]) < mpmath.mpf(1) / wit.c
            assert mpmath.mpf(wit.error.numerator) / wit.error.denominator >= abs(wit.c * golden - wit.y[0]) / wit.c
        elif dens:
            # a denominator exists but misses the error target
            need = mpmath.mpf(2) ** (-(p.degree + alpha + pair.eps) * j)
            assert all(abs(c * golden - round(c * golden)) / c > need for c in dens)
    assert len(pair.levels()) >= budget // 2


def test_sqrt2_quadratic_span_witnesses():
    p = parse_poly("x^2 + (1 + theta)*y*z", 1, 3, SQRT2, ["x", "y", "z"])
    pair = build_rational_approx_pair(p, 1, Fraction(3), budget=10)
    s2 = mpmath.sqrt(2)
    for j, wit in pair.J.items():
        c = wit.c
        # coefficient 1 + sqrt2: |c (1 + sqrt 2) - y| <= c^-1 (Legendre bound with constant 1)
        idx = list(p.order).index((0, 1, 1))
        assert abs(c * (1 + s2) - wit.y[idx]) <= mpmath.mpf(1) / c
    assert pair.levels()


def test_cf_helpers():
    assert cf_rational(Fraction(415, 93)) == [4, 2, 6, 7]
    assert cf_quadratic(0, 2, 1, 6) == [1, 2, 2, 2, 2, 2]
    assert convergents([1, 2, 2, 2])[-1] == (17, 12)


# ---------------------------------------------------------------- audits

def test_audit_dyadic_level10_pairwise_exact():
    rep = audit_system(DyadicSystem(), 10)
    assert rep.passed
    for prop, level, measured, bound, status in rep.by_property("separation_pairwise"):
        assert measured == Fraction(1, 2 ** level)


def test_audit_function_field_zero_errors():
    rep = audit_system(FunctionFieldSystem(FqContext(3, 6)), 6)
    assert rep.passed
    for prop in ("additive", "multiplicative"):
        assert all(row[2] == 0 for row in rep.by_property(prop))


def test_audit_padic_carry_bounded_by_one():
    rep = audit_system(PadicSystem(PadicContext(3, 6)), 6)
    assert rep.passed
    for prop in ("additive", "multiplicative"):
        rows = rep.by_property(prop)
        assert rows and all(row[2] <= 1 for row in rows)
    assert max(row[2] for row in rep.by_property("additive")) == 1


def test_audit_wrong_gamma_fails():
    d = DyadicSystem()
    d.gamma = Fraction(2)
    rep = audit_system(d, 10)
    assert not rep.passed
    assert any(r[0].startswith("separation") for r in rep.failures())


@pytest.mark.parametrize("make", [lambda: DyadicSystem(), lambda: FunctionFieldSystem(FqContext(3, 6)),
                                  lambda: PadicSystem(PadicContext(3, 6))])
def test_rescaled_system_validates(make):
    sys = make()
    rs = sys.rescaled(2)
    assert rs.r == sys.r ** 2 and rs.gamma == sys.gamma / 2 and rs.sigma == sys.sigma / 2
    assert audit_system(rs, 6).passed
