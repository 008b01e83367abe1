from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from avoidset.arith import (AlgebraicField, DyadicRational, FqContext, Interval, PadicContext, QQ,
                            UnramifiedExtension, enclose_real, enclose_ultra, parse_exact, parse_poly,
                            poly_enclose, poly_eval, poly_partial, ring_add, ring_mul)
from avoidset.errors import ConfigError, PrecisionMismatch, RingMismatch

SQRT2 = AlgebraicField([-2, 0, 1], [1, 2])


# ---------------------------------------------------------------- ring_add / ring_mul examples

def test_dyadic_add_canonical_scale():
    s = ring_add(DyadicRational(3, 3), DyadicRational(1, 3))
    assert s.to_fraction() == Fraction(1, 2)
    assert s.scale == 1


def test_fq_add_componentwise():
    F = FqContext(3, 4)
    assert ring_add(F([1, 2]), F([2, 2])) == F([0, 1])


def test_algebraic_add_common_scale():
    a = SQRT2.element([1, 1], 1)
    b = SQRT2.element([1, 1], 2)
    s = ring_add(a, b)
    assert s.coeffs == (3, 3) and s.scale == 2


def test_dyadic_mul():
    p = ring_mul(DyadicRational(1, 1), DyadicRational(3, 2))
    assert p.to_fraction() == Fraction(3, 8)


def test_theta_squared_is_two():
    th = SQRT2.theta()
    sq = ring_mul(th, th)
    assert sq.coeffs == (2, 0) and sq.scale == 0


def test_unramified_reduction():
    U = UnramifiedExtension(2, [1, 1, 1], 6)
    t = U([0, 1])
    assert (t * t).signed_components() == (-1, -1)


def test_mixed_precision_rejected():
    with pytest.raises(PrecisionMismatch):
        PadicContext(3, 4)(1) + PadicContext(3, 5)(1)
    with pytest.raises(PrecisionMismatch):
        FqContext(3, 4)([1]) + FqContext(3, 5)([1])


def test_different_primes_rejected():
    with pytest.raises(RingMismatch):
        PadicContext(3, 4)(1) * PadicContext(5, 4)(1)


def test_decimal_literals_rejected():
    assert parse_exact("3/8") == Fraction(3, 8)
    with pytest.raises(ConfigError):
        parse_exact("0.375")
    with pytest.raises(ConfigError):
        parse_poly("0.5*x", 1, 1)


def test_padic_negative_is_complement():
    P = PadicContext(3, 4)
    x = P(-1)
    assert x.value == 80
    assert x.signed() == -1


# ---------------------------------------------------------------- poly_eval / poly_partial

def test_ap_poly_eval():
    f = parse_poly("x - 2*y + z", 1, 3, QQ, ["x", "y", "z"])
    assert poly_eval(f, [1, 2, 3]) == 0


def test_ap_poly_eval_f3():
    F = FqContext(3, 4)
    f = parse_poly("x - 2*y + z", 1, 3, F, ["x", "y", "z"])
    val = poly_eval(f, [F([0]), F([1]), F([1])])
    assert val == F([2])


ANGLE = ("4*((x1 - y1)*(z1 - y1) + (x2 - y2)*(z2 - y2))^2"
         " - ((x1 - y1)^2 + (x2 - y2)^2)*((z1 - y1)^2 + (z2 - y2)^2)")


def angle_poly(cos2):
    # ((x - y).(z - y))^2 = cos^2 |x - y|^2 |z - y|^2, vertex at y
    c = Fraction(cos2)
    text = (f"{c.denominator}*((x1 - y1)*(z1 - y1) + (x2 - y2)*(z2 - y2))^2"
            f" - {c.numerator}*((x1 - y1)^2 + (x2 - y2)^2)*((z1 - y1)^2 + (z2 - y2)^2)")
    return parse_poly(text, 2, 3, QQ, ["x", "y", "z"])


def test_right_angle_vanishes_for_cos_zero():
    f = angle_poly(0)
    # vertex at the origin, arms along the axes
    assert poly_eval(f, [1, 0, 0, 0, 0, 1]) == 0


def test_shipped_angle_poly_changes_sign_across_60_degrees():
    # 60 degrees at the vertex y = 0 has no rational witness with x on an axis,
    # but the polynomial must change sign between 45 and about 63 degrees
    f = parse_poly(ANGLE, 2, 3, QQ, ["x", "y", "z"])
    assert poly_eval(f, [2, 0, 0, 0, 1, 1]) > 0
    assert poly_eval(f, [2, 0, 0, 0, 1, 2]) < 0


def test_partial_constant():
    f = parse_poly("x - 2*y + z", 1, 3, QQ, ["x", "y", "z"])
    d = poly_partial(f, 1, 0)
    assert d.is_constant() and d.constant_term() == -2


def test_partial_x2y():
    f = parse_poly("x^2*y", 1, 2, QQ, ["x", "y"])
    assert poly_partial(f, 0, 0).terms == parse_poly("2*x*y", 1, 2, QQ, ["x", "y"]).terms


def test_full_chain_gives_factorial_times_coeff():
    f = parse_poly("5*x^3*y^2 + x*y + 7", 1, 2, QQ, ["x", "y"])
    g = f.apply_chain([(0, 0)] * 3 + [(1, 0)] * 2)
    assert g.is_constant() and g.constant_term() == 5 * 6 * 2


@settings(max_examples=30, deadline=None)
@given(st.integers(-8, 8), st.integers(-8, 8))
def test_partial_matches_finite_differences(a, b):
    f = parse_poly("x^3 - 2*x*y^2 + y", 1, 2, QQ, ["x", "y"])
    df = poly_partial(f, 0, 0)
    x = [Fraction(a, 4), Fraction(b, 4)]
    exact = poly_eval(df, x)
    errs = []
    for k in range(5, 11):
        h = Fraction(1, 2 ** k)
        q = (poly_eval(f, [x[0] + h, x[1]]) - poly_eval(f, [x[0] - h, x[1]])) / (2 * h)
        errs.append(abs(q - exact))
    # centered differences of a cubic: error is exactly h^2 times a constant
    for e1, e2 in zip(errs, errs[1:]):
        assert e2 * 4 == e1


# ---------------------------------------------------------------- enclosures

def test_enclose_ap_unit_cube():
    f = parse_poly("x - 2*y + z", 1, 3, QQ, ["x", "y", "z"])
    iv = poly_enclose(f, [Interval(0, 1)] * 3)
    assert (iv.lo, iv.hi) == (-2, 2)


def test_enclose_constant():
    f = parse_poly("5", 1, 2, QQ, ["x", "y"])
    for m in ("natural", "taylor", "tight"):
        iv = enclose_real(f, [Interval(-3, 7), Interval(1, 2)], method=m)
        assert (iv.lo, iv.hi) == (5, 5)


def test_enclose_xy_against_grid_oracle():
    f = parse_poly("x*y", 1, 2, QQ, ["x", "y"])
    iv = enclose_real(f, [Interval(1, 2), Interval(3, 4)], method="tight")
    # grid oracle at step 2^-10
    xs = np.linspace(1, 2, 1025)
    ys = np.linspace(3, 4, 1025)
    vals = np.outer(xs, ys)
    assert iv.lo <= vals.min() and iv.hi >= vals.max()
    assert iv.width() <= 5


@pytest.mark.parametrize("method", ["natural", "taylor", "tight"])
def test_enclosure_sound_on_random_samples(method):
    f = parse_poly("x^3 - 3*x*y + y^2 - 1/3", 1, 2, QQ, ["x", "y"])
    box = [Interval(Fraction(-1, 2), Fraction(3, 4)), Interval(Fraction(1, 8), Fraction(5, 4))]
    iv = enclose_real(f, box, method=method)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = [b.lo + Fraction(int(rng.integers(0, 4097)), 4096) * b.width() for b in box]
        assert iv.contains(poly_eval(f, x))


def test_tight_is_intersection():
    f = parse_poly("x^2 - x", 1, 1, QQ, ["x"])
    box = [Interval(0, 1)]
    a = enclose_real(f, box, method="natural")
    b = enclose_real(f, box, method="taylor")
    c = enclose_real(f, box, method="tight")
    assert c.lo == max(a.lo, b.lo) and c.hi == min(a.hi, b.hi)


def test_ultra_enclosure_exact_when_constant_dominates():
    F = FqContext(3, 6)
    f = parse_poly("x - 2*y + z", 1, 3, F, ["x", "y", "z"])
    # centers 0, 1, 0 on balls of radius 3^-2: value -2 has valuation 0 < 2
    enc = enclose_ultra(f, [F([0]), F([1]), F([0])], [2, 2, 2])
    assert enc.exact and enc.valuation == 0
    enc = enclose_ultra(f, [F([0]), F([0]), F([0])], [2, 2, 2])
    assert not enc.exact and enc.valuation == 2


# ---------------------------------------------------------------- ring axioms (randomized)

def _fq_el(F):
    return st.lists(st.integers(0, F.q - 1), min_size=F.precision, max_size=F.precision).map(F)


F3 = FqContext(3, 5)
F9 = FqContext(9, 3)
P5 = PadicContext(5, 5)
U2 = UnramifiedExtension(2, [1, 1, 1], 5)

ELEMENTS = {
    "dyadic": st.builds(DyadicRational, st.integers(-64, 64), st.integers(0, 6)),
    "fq3": _fq_el(F3),
    "fq9": _fq_el(F9),
    "padic": st.integers(0, P5.modulus - 1).map(P5),
    "unramified": st.lists(st.integers(0, U2.modulus - 1), min_size=2, max_size=2).map(U2),
    "algebraic": st.builds(lambda a, b, s: SQRT2.element([a, b], s),
                           st.integers(-20, 20), st.integers(-20, 20), st.integers(0, 4)),
}


@pytest.mark.parametrize("ring", sorted(ELEMENTS))
def test_ring_axioms(ring):
    el = ELEMENTS[ring]

    @settings(max_examples=60, deadline=None)
    @given(el, el, el)
    def check(a, b, c):
        assert a + b == b + a
        assert a * b == b * a
        assert (a + b) + c == a + (b + c)
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c

    check()


def test_ultrametric_inequality_exhaustive_f3_prec4():
    F = FqContext(3, 4)
    els = [F(d) for d in product(range(3), repeat=4)]
    absv = {e: F.abs_value(e) for e in els}
    for x in els:
        for y in els:
            assert F.abs_value(x + y) <= max(absv[x], absv[y])


@pytest.mark.parametrize("ctx", [FqContext(3, 3), PadicContext(3, 3), FqContext(4, 3)])
def test_abs_multiplicative_exhaustive_prec3(ctx):
    if isinstance(ctx, FqContext):
        els = [ctx(d) for d in product(range(ctx.q), repeat=3)]
    else:
        els = [ctx(v) for v in range(ctx.modulus)]
    P = ctx.precision
    for x in els:
        for y in els:
            vx, vy = ctx.valuation(x), ctx.valuation(y)
            if vx + vy < P:
                # below the truncation the product keeps its valuation exactly
                assert ctx.valuation(x * y) == vx + vy
            else:
                assert (x * y).is_zero()
