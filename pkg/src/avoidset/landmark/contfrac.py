"""Continued fractions of rationals and quadratic irrationals, and convergents."""
from __future__ import annotations

from fractions import Fraction
from math import isqrt


def cf_rational(x) -> list:
    x = Fraction(x)
    out = []
    p, q = x.numerator, x.denominator
    while q:
        a, r = divmod(p, q)
        out.append(a)
        p, q = q, r
    return out


def cf_quadratic(P: int, D: int, Q: int, terms: int) -> list:
    """Partial quotients of (P + sqrt(D)) / Q for a non-square D > 0."""
    s = isqrt(D)
    if s * s == D:
        raise ValueError("D must not be a perfect square")
    if Q == 0:
        raise ValueError("Q must be nonzero")
    if (D - P * P) % Q:
        P, D, Q = P * abs(Q), D * Q * Q, Q * abs(Q)
        s = isqrt(D)
    out = []
    for _ in range(terms):
        if Q > 0:
            a = (P + s) // Q
        else:
            a = -((P + s) // (-Q)) - 1
        out.append(a)
        P = a * Q - P
        Q = (D - P * P) // Q
    return out


def convergents(terms):
    """(p_n, q_n) for each prefix of the continued fraction."""
    p0, q0, p1, q1 = 1, 0, terms[0], 1
    out = [(p1, q1)]
    for a in terms[1:]:
        p0, q0, p1, q1 = p1, q1, a * p1 + p0, a * q1 + q0
        out.append((p1, q1))
    return out


def quadratic_root_cf(field, terms: int) -> list:
    """Continued fraction of the generator of a quadratic field (monic minpoly)."""
    c, b, one = field.minpoly
    if field.k != 2 or one != 1:
        raise ValueError("quadratic monic fields only")
    disc = b * b - 4 * c
    # roots (-b +- sqrt(disc)) / 2; pick the one inside the enclosure
    th = field.theta_interval()
    if th.hi >= Fraction(-b, 2):
        return cf_quadratic(-b, disc, 2, terms)
    return cf_quadratic(b, disc, -2, terms)
