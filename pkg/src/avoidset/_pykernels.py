"""Pure-Python reference versions of the compiled kernels."""
from __future__ import annotations

import numpy as np


def int_level(x: int, p: int) -> int:
    """Level of an integer landmark: number of base-p digits of |x|, minus one."""
    x = abs(x)
    n = 0
    while x >= p:
        x //= p
        n += 1
    return n


def int_pair_excess(xs, p: int):
    """Max over pairs of l(x+y) - max(l(x), l(y)) and l(xy) - l(x) - l(y)."""
    xs = [int(x) for x in xs]
    lv = [int_level(x, p) for x in xs]
    add = mul = -(10 ** 9)
    for i, x in enumerate(xs):
        lx = lv[i]
        for j, y in enumerate(xs):
            ly = lv[j]
            a = int_level(x + y, p) - (lx if lx > ly else ly)
            if a > add:
                add = a
            if x and y:
                m = int_level(x * y, p) - lx - ly
                if m > mul:
                    mul = m
    return add, mul


def _v2(a: int) -> int:
    return (a & -a).bit_length() - 1


def dyadic_pair_excess(nums, level: int):
    """Pairs of a/2^level: excess of l(x+y) and l(xy) over the axiom bounds."""
    nums = [int(a) for a in nums]
    lv = [0 if a == 0 else level - _v2(a) for a in nums]
    add = mul = -(10 ** 9)
    for i, a in enumerate(nums):
        for j, b in enumerate(nums):
            s = a + b
            ls = 0 if s == 0 else max(0, level - _v2(s))
            e = ls - max(lv[i], lv[j])
            if e > add:
                add = e
            if a and b:
                pr = a * b
                lp = max(0, 2 * level - _v2(pr))
                e = lp - lv[i] - lv[j]
                if e > mul:
                    mul = e
    return add, mul


def fp_pair_excess(polys, p: int):
    """Pairs of F_p polynomials (digit lists): degree excess of sums and products."""
    polys = [list(x) for x in polys]

    def deg(v):
        for i in range(len(v) - 1, -1, -1):
            if v[i] % p:
                return i
        return 0

    dg = [deg(v) for v in polys]
    add = mul = -(10 ** 9)
    for i, a in enumerate(polys):
        for j, b in enumerate(polys):
            L = max(len(a), len(b))
            s = [((a[k] if k < len(a) else 0) + (b[k] if k < len(b) else 0)) % p for k in range(L)]
            e = deg(s) - max(dg[i], dg[j])
            if e > add:
                add = e
            if any(a) and any(b):
                pr = [0] * (len(a) + len(b) - 1)
                for u, x in enumerate(a):
                    if x:
                        for w, y in enumerate(b):
                            pr[u + w] += x * y
                e = deg(pr) - dg[i] - dg[j]
                if e > mul:
                    mul = e
    return add, mul


def fp_poly_valuations(coeffs, exps, points, p: int, prec: int):
    """Valuations of a polynomial over F_p[[t]]/t^prec at many points.

    coeffs: per term, a digit list of the coefficient; exps: per term, the
    exponent vector; points: per sample, per variable, a digit list.
    Returns a list of valuations (prec for zero).
    """
    out = []
    for pt in points:
        acc = [0] * prec
        for c, e in zip(coeffs, exps):
            term = list(c) + [0] * (prec - len(c))
            for var, a in enumerate(e):
                for _ in range(a):
                    x = pt[var]
                    nt = [0] * prec
                    for u in range(prec):
                        tu = term[u]
                        if tu:
                            for w in range(prec - u):
                                if x[w]:
                                    nt[u + w] += tu * x[w]
                    term = [y % p for y in nt]
            for u in range(prec):
                acc[u] = (acc[u] + term[u]) % p
        v = prec
        for u in range(prec):
            if acc[u]:
                v = u
                break
        out.append(v)
    return np.array(out, dtype=np.int64)
