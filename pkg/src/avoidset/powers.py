"""Rational brackets for r^e with rational exponents."""
from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import mpmath
from sympy import integer_nthroot

_SLACK = Fraction(1, 2 ** 160)


@lru_cache(maxsize=4096)
def rpow_bounds(r: Fraction, e: Fraction):
    """(lo, hi) rationals with lo <= r^e <= hi; lo == hi when r^e is rational."""
    r, e = Fraction(r), Fraction(e)
    if e.denominator == 1:
        v = r ** int(e)
        return v, v
    a, ok1 = integer_nthroot(r.numerator, e.denominator)
    b, ok2 = integer_nthroot(r.denominator, e.denominator)
    if ok1 and ok2:
        v = Fraction(int(a), int(b)) ** e.numerator
        return v, v
    with mpmath.workdps(80):
        x = mpmath.power(mpmath.mpf(r.numerator) / r.denominator, mpmath.mpf(e.numerator) / e.denominator)
        m, ex = mpmath.frexp(x)
        approx = Fraction(int(mpmath.floor(m * 2 ** 200))) / 2 ** 200 * Fraction(2) ** int(ex)
    return approx * (1 - _SLACK), approx * (1 + _SLACK)


def rpow_lo(r, e) -> Fraction:
    return rpow_bounds(Fraction(r), Fraction(e))[0]


def rpow_hi(r, e) -> Fraction:
    return rpow_bounds(Fraction(r), Fraction(e))[1]


def ceil_frac(x) -> int:
    x = Fraction(x)
    return -((-x.numerator) // x.denominator)


def floor_frac(x) -> int:
    x = Fraction(x)
    return x.numerator // x.denominator


def log_r(x: Fraction, r: Fraction) -> float:
    """log base r of a positive rational, for reporting only."""
    return (math.log(x.numerator) - math.log(x.denominator)) / (math.log(r.numerator) - math.log(r.denominator))


def fmt_q(x) -> str:
    """Exact fraction when short, else a 15-digit decimal prefixed with '~'."""
    if x is None:
        return "-"
    x = Fraction(x)
    if x.denominator <= 10 ** 12 and abs(x.numerator) <= 10 ** 15:
        return str(x)
    with mpmath.workdps(40):
        return "~" + mpmath.nstr(mpmath.mpf(x.numerator) / x.denominator, 15)
